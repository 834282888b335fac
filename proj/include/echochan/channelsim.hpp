#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "echochan/dataset.hpp"
#include "echochan/matrix.hpp"

namespace echochan {

/// Gray-coded QPSK, unit energy:
///   00 -> (+1+1j)/sqrt2, 01 -> (-1+1j)/sqrt2, 11 -> (-1-1j)/sqrt2, 10 -> (+1-1j)/sqrt2.
/// Throws ConfigError on an odd bit count.
std::vector<std::complex<double>> qpsk_modulate(std::span<const std::uint8_t> bits);

/// Raised-cosine impulse response sampled at span * sps + 1 points centred on
/// zero (t / Ts = (i - span*sps/2) / sps). Normalized so the centre tap is 1.
std::vector<double> raised_cosine_taps(double rolloff, std::size_t span, std::size_t sps);

/// Raised-cosine value at normalized time x = t / Ts, including the
/// removable singularity at |x| = 1 / (2 rolloff).
double raised_cosine(double rolloff, double x);

/// Upsamples symbols by sps and filters them with a same-length convolution
/// that compensates the filter's group delay, so sample m*sps carries symbol m.
/// Output is 2 x len (row 0 = I, row 1 = Q).
Matrix shape_pulses(std::span<const std::complex<double>> symbols, const WaveformSpec& wave,
                    std::size_t len);

/// Sends a 2 x T I/Q signal through the channel.
///
/// AWGN noise has per-component variance P * 10^(-snr_db/10) / 2, where P is
/// the mean of I^2 + Q^2 of the noiseless signal. For multipath, tap phases
/// phi_k are drawn from derive_seed(seed, "phase"); samples before a tap's
/// delay contribute zero.
Matrix apply_channel(const ChannelSpec& spec, const Matrix& tx, std::uint64_t seed);

/// Random bits -> QPSK -> pulse shaping -> channel, per sequence. Sequence i
/// uses derive_seed(wave.seed, i), so sequences are independent of each other
/// and of how many are generated.
SequenceDataset generate_dataset(const WaveformSpec& wave, const ChannelSpec& chan,
                                 std::size_t num_sequences, const std::string& preset = {});

/// Empirical SNR (dB) of a dataset, using the noiseless channel response as
/// the signal reference.
double empirical_snr_db(const SequenceDataset& ds);

}  // namespace echochan

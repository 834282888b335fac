#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "echochan/matrix.hpp"

namespace echochan {

/// QPSK waveform parameters. One reservoir step per I/Q sample.
struct WaveformSpec {
  std::size_t samples_per_symbol = 4;
  double rolloff = 0.35;
  std::size_t filter_span = 8;  // symbols
  std::size_t sequence_length = 578;
  std::uint64_t seed = 0;

  /// 2 * ceil(T / sps): enough symbols to cover the sequence.
  std::size_t bits_per_sequence() const noexcept {
    return 2 * ((sequence_length + samples_per_symbol - 1) / samples_per_symbol);
  }
  void validate() const;

  friend bool operator==(const WaveformSpec&, const WaveformSpec&) = default;
};

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

struct AwgnChannel {
  double snr_db = 20.0;  // kNoNoise disables noise
  friend bool operator==(const AwgnChannel&, const AwgnChannel&) = default;
};

/// One path of a tapped delay line; the complex gain is gain_i + j gain_q.
struct Tap {
  std::size_t delay = 0;
  double gain_i = 1.0;
  double gain_q = 0.0;
  friend bool operator==(const Tap&, const Tap&) = default;
};

/// Tapped delay line with sinusoidal tap-gain modulation:
///   g_k(t) = gain_k * (1 + disturbance * sin(2 pi t / period + phi_k)).
struct MultipathChannel {
  std::vector<Tap> taps{Tap{}};
  double disturbance = 0.0;
  std::size_t disturbance_period = 100;
  double snr_db = kNoNoise;
  friend bool operator==(const MultipathChannel&, const MultipathChannel&) = default;
};

using ChannelSpec = std::variant<AwgnChannel, MultipathChannel>;

void validate(const ChannelSpec& spec);
std::string describe(const ChannelSpec& spec);
double snr_db_of(const ChannelSpec& spec);

/// How a dataset was produced.
struct DatasetMeta {
  std::string preset;  // empty when not generated from a named preset
  WaveformSpec waveform;
  ChannelSpec channel = MultipathChannel{};
  std::uint64_t seed = 0;

  friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

/// Paired transmitted (inputs, K x T) and received (targets, L x T) sequences.
struct SequenceDataset {
  std::size_t seq_len = 0;
  std::size_t input_dim = 2;
  std::size_t output_dim = 2;
  std::vector<Matrix> inputs;
  std::vector<Matrix> targets;
  DatasetMeta meta;

  std::size_t num_sequences() const noexcept { return inputs.size(); }
  bool empty() const noexcept { return inputs.empty(); }

  /// Throws ShapeError if any sequence deviates from the declared shape.
  void validate() const;

  /// Sequences at the given indices, in that order.
  SequenceDataset subset(std::span<const std::size_t> indices) const;
  /// Sequences [first, first + count).
  SequenceDataset slice(std::size_t first, std::size_t count) const;

  friend bool operator==(const SequenceDataset&, const SequenceDataset&) = default;
};

struct DatasetSplit {
  SequenceDataset train;
  SequenceDataset test;
};

/// Seeded shuffle by sequence, then the first round(fraction * n) sequences
/// go to train and the rest to test.
DatasetSplit split_dataset(const SequenceDataset& ds, double train_fraction, std::uint64_t seed);

/// FNV-1a over the shape and the little-endian payload bytes.
std::uint64_t fingerprint(const SequenceDataset& ds);

}  // namespace echochan

#include "echochan/channelsim.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "echochan/error.hpp"
#include "echochan/rng.hpp"

namespace echochan {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

double signal_power(const Matrix& x) {
  if (x.cols() == 0) return 0.0;
  double sum = 0.0;
  for (double v : x.data()) sum += v * v;
  return sum / static_cast<double>(x.cols());
}

void require_iq(const Matrix& tx) {
  if (tx.rows() != 2) {
    throw ShapeError("apply_channel: expected a 2 x T I/Q signal, got " + tx.shape_string());
  }
}

Matrix multipath_response(const MultipathChannel& spec, const Matrix& tx, std::uint64_t seed) {
  const std::size_t len = tx.cols();
  Rng phase_rng(derive_seed(seed, "phase"));
  std::vector<double> phases(spec.taps.size());
  for (double& p : phases) p = phase_rng.uniform(0.0, 2.0 * kPi);

  Matrix rx(2, len);
  const double period = static_cast<double>(spec.disturbance_period);
  for (std::size_t k = 0; k < spec.taps.size(); ++k) {
    const Tap& tap = spec.taps[k];
    for (std::size_t t = tap.delay; t < len; ++t) {
      double scale = 1.0;
      if (spec.disturbance != 0.0) {
        scale += spec.disturbance * std::sin(2.0 * kPi * static_cast<double>(t) / period + phases[k]);
      }
      const double gi = tap.gain_i * scale;
      const double gq = tap.gain_q * scale;
      const double xi = tx(0, t - tap.delay);
      const double xq = tx(1, t - tap.delay);
      rx(0, t) += gi * xi - gq * xq;
      rx(1, t) += gi * xq + gq * xi;
    }
  }
  return rx;
}

void add_noise(Matrix& rx, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0.0) return;
  const double variance = signal_power(rx) * std::pow(10.0, -snr_db / 10.0) / 2.0;
  const double sigma = std::sqrt(variance);
  Rng rng(derive_seed(seed, "noise"));
  for (double& v : rx.data()) v += sigma * rng.normal();
}

}  // namespace

void WaveformSpec::validate() const {
  if (samples_per_symbol < 1) throw ConfigError("waveform: samples_per_symbol must be >= 1");
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ConfigError("waveform: rolloff must lie in (0, 1]");
  if (filter_span < 2) throw ConfigError("waveform: filter_span must be >= 2 symbols");
  if (sequence_length < 1) throw ConfigError("waveform: sequence_length must be >= 1");
}

void validate(const ChannelSpec& spec) {
  if (const auto* awgn = std::get_if<AwgnChannel>(&spec)) {
    if (std::isnan(awgn->snr_db)) throw ConfigError("awgn channel: snr_db is NaN");
    return;
  }
  const auto& mp = std::get<MultipathChannel>(spec);
  if (mp.taps.empty()) throw ConfigError("multipath channel: at least one tap is required");
  for (std::size_t k = 1; k < mp.taps.size(); ++k) {
    if (mp.taps[k].delay <= mp.taps[k - 1].delay) {
      throw ConfigError("multipath channel: tap delays must be strictly increasing");
    }
  }
  for (const Tap& tap : mp.taps) {
    if (!std::isfinite(tap.gain_i) || !std::isfinite(tap.gain_q)) {
      throw ConfigError("multipath channel: tap gains must be finite");
    }
  }
  if (!(mp.disturbance >= 0.0 && mp.disturbance <= 1.0)) {
    throw ConfigError("multipath channel: disturbance must lie in [0, 1]");
  }
  if (mp.disturbance_period < 1) throw ConfigError("multipath channel: disturbance_period must be >= 1");
  if (std::isnan(mp.snr_db)) throw ConfigError("multipath channel: snr_db is NaN");
}

std::string describe(const ChannelSpec& spec) {
  std::ostringstream os;
  if (const auto* awgn = std::get_if<AwgnChannel>(&spec)) {
    os << "awgn(snr_db=" << awgn->snr_db << ")";
  } else {
    const auto& mp = std::get<MultipathChannel>(spec);
    os << "multipath(taps=" << mp.taps.size() << ", disturbance=" << mp.disturbance
       << ", period=" << mp.disturbance_period << ", snr_db=" << mp.snr_db << ")";
  }
  return os.str();
}

double snr_db_of(const ChannelSpec& spec) {
  return std::visit([](const auto& c) { return c.snr_db; }, spec);
}

std::vector<std::complex<double>> qpsk_modulate(std::span<const std::uint8_t> bits) {
  if (bits.size() % 2 != 0) {
    throw ConfigError("qpsk_modulate: bit count " + std::to_string(bits.size()) + " is odd");
  }
  const double a = 1.0 / std::numbers::sqrt2;
  std::vector<std::complex<double>> out;
  out.reserve(bits.size() / 2);
  for (std::size_t i = 0; i < bits.size(); i += 2) {
    // Gray coding: the second bit sets the sign of I, the first the sign of Q.
    const double i_sign = bits[i + 1] != 0 ? -1.0 : 1.0;
    const double q_sign = bits[i] != 0 ? -1.0 : 1.0;
    out.emplace_back(i_sign * a, q_sign * a);
  }
  return out;
}

double raised_cosine(double rolloff, double x) {
  const double edge = 2.0 * rolloff * x;
  if (std::abs(std::abs(edge) - 1.0) < 1e-12) {
    return (kPi / 4.0) * sinc(1.0 / (2.0 * rolloff));
  }
  return sinc(x) * std::cos(kPi * rolloff * x) / (1.0 - edge * edge);
}

std::vector<double> raised_cosine_taps(double rolloff, std::size_t span, std::size_t sps) {
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ConfigError("raised_cosine_taps: rolloff must lie in (0, 1]");
  if (span < 2) throw ConfigError("raised_cosine_taps: span must be >= 2");
  if (sps < 1) throw ConfigError("raised_cosine_taps: sps must be >= 1");
  const std::size_t count = span * sps + 1;
  const double half = static_cast<double>(span * sps) / 2.0;
  std::vector<double> taps(count);
  for (std::size_t i = 0; i < count; ++i) {
    taps[i] = raised_cosine(rolloff, (static_cast<double>(i) - half) / static_cast<double>(sps));
  }
  const double centre = raised_cosine(rolloff, 0.0);
  for (double& t : taps) t /= centre;
  return taps;
}

Matrix shape_pulses(std::span<const std::complex<double>> symbols, const WaveformSpec& wave,
                    std::size_t len) {
  const auto h = raised_cosine_taps(wave.rolloff, wave.filter_span, wave.samples_per_symbol);
  const std::size_t sps = wave.samples_per_symbol;
  const std::ptrdiff_t delay = static_cast<std::ptrdiff_t>(wave.filter_span * sps / 2);
  const std::ptrdiff_t up_len = static_cast<std::ptrdiff_t>(symbols.size() * sps);
  Matrix tx(2, len);
  for (std::size_t n = 0; n < len; ++n) {
    double acc_i = 0.0;
    double acc_q = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(n) + delay - static_cast<std::ptrdiff_t>(i);
      if (src < 0 || src >= up_len || src % static_cast<std::ptrdiff_t>(sps) != 0) continue;
      const auto& sym = symbols[static_cast<std::size_t>(src) / sps];
      acc_i += h[i] * sym.real();
      acc_q += h[i] * sym.imag();
    }
    tx(0, n) = acc_i;
    tx(1, n) = acc_q;
  }
  return tx;
}

Matrix apply_channel(const ChannelSpec& spec, const Matrix& tx, std::uint64_t seed) {
  require_iq(tx);
  validate(spec);
  if (const auto* awgn = std::get_if<AwgnChannel>(&spec)) {
    Matrix rx = tx;
    add_noise(rx, awgn->snr_db, seed);
    return rx;
  }
  const auto& mp = std::get<MultipathChannel>(spec);
  Matrix rx = multipath_response(mp, tx, seed);
  add_noise(rx, mp.snr_db, seed);
  return rx;
}

SequenceDataset generate_dataset(const WaveformSpec& wave, const ChannelSpec& chan,
                                 std::size_t num_sequences, const std::string& preset) {
  wave.validate();
  validate(chan);
  SequenceDataset ds;
  ds.seq_len = wave.sequence_length;
  ds.input_dim = 2;
  ds.output_dim = 2;
  ds.meta = DatasetMeta{preset, wave, chan, wave.seed};
  ds.inputs.reserve(num_sequences);
  ds.targets.reserve(num_sequences);
  const std::size_t nbits = wave.bits_per_sequence();
  std::vector<std::uint8_t> bits(nbits);
  for (std::size_t s = 0; s < num_sequences; ++s) {
    const std::uint64_t seq_seed = derive_seed(wave.seed, s);
    Rng bit_rng(derive_seed(seq_seed, "bits"));
    for (auto& b : bits) b = static_cast<std::uint8_t>(bit_rng.next_u64() >> 63);
    const auto symbols = qpsk_modulate(bits);
    Matrix tx = shape_pulses(symbols, wave, wave.sequence_length);
    Matrix rx = apply_channel(chan, tx, seq_seed);
    ds.inputs.push_back(std::move(tx));
    ds.targets.push_back(std::move(rx));
  }
  return ds;
}

double empirical_snr_db(const SequenceDataset& ds) {
  ChannelSpec clean = ds.meta.channel;
  std::visit([](auto& c) { c.snr_db = kNoNoise; }, clean);
  double signal = 0.0;
  double noise = 0.0;
  for (std::size_t s = 0; s < ds.num_sequences(); ++s) {
    const Matrix reference = apply_channel(clean, ds.inputs[s], derive_seed(ds.meta.seed, s));
    for (std::size_t i = 0; i < reference.size(); ++i) {
      const double r = reference.data()[i];
      const double e = ds.targets[s].data()[i] - r;
      signal += r * r;
      noise += e * e;
    }
  }
  if (noise == 0.0) return kNoNoise;
  return 10.0 * std::log10(signal / noise);
}

}  // namespace echochan

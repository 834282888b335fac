#include "echochan/store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <unistd.h>

#include "echochan/error.hpp"
#include "echochan/eval.hpp"
#include "echochan/rng.hpp"

namespace echochan {

namespace {

constexpr char kModelMagic[4] = {'E', 'S', 'N', '1'};
constexpr char kDatasetMagic[4] = {'E', 'S', 'D', '1'};
constexpr std::size_t kVersionFieldBytes = 32;
constexpr std::size_t kPresetFieldBytes = 32;

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void zeros(std::size_t n) { out_.insert(out_.end(), n, 0); }
  void fixed_string(const std::string& s, std::size_t width) {
    const std::size_t n = std::min(s.size(), width - 1);
    bytes(s.data(), n);
    zeros(width - n);
  }
  void matrix(const Matrix& m) {
    for (double v : m.data()) f64(v);
  }
  std::size_t size() const { return out_.size(); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  const std::uint8_t* take(std::size_t n) {
    if (pos_ + n > in_.size()) {
      throw IntegrityError("truncated file: need " + std::to_string(pos_ + n) + " bytes, have " +
                               std::to_string(in_.size()),
                           pos_ + n, in_.size());
    }
    const auto* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint8_t u8() { return *take(1); }
  std::uint32_t u32() {
    const auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void skip(std::size_t n) { take(n); }
  std::string fixed_string(std::size_t width) {
    const auto* p = reinterpret_cast<const char*>(take(width));
    return std::string(p, strnlen(p, width));
  }
  Matrix matrix(std::size_t rows, std::size_t cols) {
    std::vector<double> data(rows * cols);
    for (double& v : data) v = f64();
    try {
      return Matrix(rows, cols, std::move(data));
    } catch (const NonFiniteError&) {
      throw FormatError("stored matrix contains non-finite values");
    }
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

void check_magic(Reader& r, const char (&magic)[4], const char* kind) {
  if (std::memcmp(r.take(4), magic, 4) != 0) {
    throw FormatError(std::string("not a ") + kind + " file: bad magic bytes (expected '" +
                      std::string(magic, 4) + "')");
  }
}

void check_version(std::uint32_t found, std::uint32_t supported, const char* kind) {
  if (found > supported) {
    throw VersionError(std::string(kind) + " format version " + std::to_string(found) +
                       " is newer than supported version " + std::to_string(supported));
  }
  if (found != supported) {
    throw VersionError(std::string(kind) + " format version " + std::to_string(found) +
                       " is not supported (expected " + std::to_string(supported) + ")");
  }
}

// Overflow-checked element count for payload size computation.
std::size_t checked_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > SIZE_MAX / a) throw FormatError("header dimensions overflow");
  return a * b;
}

void check_size(std::size_t expected, std::size_t actual, const char* kind) {
  if (expected != actual) {
    throw IntegrityError(std::string(kind) + " file has " + std::to_string(actual) +
                             " bytes but its header implies " + std::to_string(expected),
                         expected, actual);
  }
}

std::uint8_t method_code(const RegressionMethod& m) { return static_cast<std::uint8_t>(m.index()); }

}  // namespace

std::string tool_version() { return "echochan 1.0.0"; }

// ---------------------------------------------------------------------------
// Model container

std::vector<std::uint8_t> encode_model(const ModelArtifact& artifact) {
  const Reservoir& res = artifact.reservoir;
  const ReservoirConfig& cfg = res.config();
  const ReadoutModel& ro = artifact.readout;
  if (ro.w_out.rows() != res.output_dim() || ro.w_out.cols() != res.size()) {
    throw ShapeError("save_model: readout " + ro.w_out.shape_string() +
                     " does not match reservoir N=" + std::to_string(res.size()) + ", L=" +
                     std::to_string(res.output_dim()));
  }
  std::vector<std::uint8_t> out;
  Writer w(out);
  w.bytes(kModelMagic, 4);
  w.u32(kModelFormatVersion);
  w.u64(cfg.input_dim);
  w.u64(cfg.reservoir_size);
  w.u64(cfg.output_dim);
  w.u8(static_cast<std::uint8_t>(cfg.init));
  w.u8(static_cast<std::uint8_t>(cfg.activation));
  w.u8(cfg.use_feedback ? 1 : 0);
  w.u8(cfg.allow_unstable ? 1 : 0);
  w.zeros(4);
  w.f64(cfg.sparsity);
  w.f64(cfg.target_spectral_radius);
  w.u64(cfg.washout);
  w.u64(cfg.seed);
  w.f64(res.achieved_radius());
  w.u8(method_code(ro.method));
  w.zeros(7);
  double lambda = 0.0;
  std::uint64_t max_iter = 0;
  double tol = 0.0;
  if (const auto* ridge = std::get_if<Ridge>(&ro.method)) {
    lambda = ridge->lambda;
  } else if (const auto* lasso = std::get_if<Lasso>(&ro.method)) {
    lambda = lasso->lambda;
    max_iter = lasso->max_iter;
    tol = lasso->tol;
  }
  w.f64(lambda);
  w.u64(max_iter);
  w.f64(tol);
  w.u64(artifact.provenance.master_seed);
  w.u64(artifact.provenance.dataset_fingerprint);
  w.fixed_string(artifact.provenance.tool_version, kVersionFieldBytes);
  if (w.size() != kModelHeaderBytes) throw std::logic_error("model header layout drifted");
  w.matrix(res.w_in());
  w.matrix(res.w());
  w.matrix(res.w_fb());
  w.matrix(ro.w_out);
  return out;
}

ModelArtifact decode_model(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4) throw FormatError("not a model file: shorter than the magic bytes");
  check_magic(r, kModelMagic, "model");
  if (bytes.size() < kModelHeaderBytes) {
    throw IntegrityError("model header truncated: " + std::to_string(bytes.size()) + " of " +
                             std::to_string(kModelHeaderBytes) + " bytes",
                         kModelHeaderBytes, bytes.size());
  }
  check_version(r.u32(), kModelFormatVersion, "model");
  ReservoirConfig cfg;
  cfg.input_dim = r.u64();
  cfg.reservoir_size = r.u64();
  cfg.output_dim = r.u64();
  const std::uint8_t init = r.u8();
  const std::uint8_t act = r.u8();
  const std::uint8_t feedback = r.u8();
  const std::uint8_t unstable = r.u8();
  r.skip(4);
  if (init > 3 || act > 2 || feedback > 1 || unstable > 1) {
    throw FormatError("model header has an invalid enum or flag value");
  }
  cfg.init = static_cast<InitMethod>(init);
  cfg.activation = static_cast<Activation>(act);
  cfg.use_feedback = feedback == 1;
  cfg.allow_unstable = unstable == 1;
  cfg.sparsity = r.f64();
  cfg.target_spectral_radius = r.f64();
  cfg.washout = r.u64();
  cfg.seed = r.u64();
  const double achieved = r.f64();
  const std::uint8_t method = r.u8();
  r.skip(7);
  const double lambda = r.f64();
  const std::uint64_t max_iter = r.u64();
  const double tol = r.f64();
  Provenance prov;
  prov.master_seed = r.u64();
  prov.dataset_fingerprint = r.u64();
  prov.tool_version = r.fixed_string(kVersionFieldBytes);

  const std::size_t n = cfg.reservoir_size;
  const std::size_t k = cfg.input_dim;
  const std::size_t l = cfg.output_dim;
  if (n == 0 || k == 0 || l == 0) throw ShapeError("model header has a zero dimension");
  const std::size_t values = checked_mul(n, k) + checked_mul(n, n) + checked_mul(n, l) + checked_mul(l, n);
  check_size(kModelHeaderBytes + checked_mul(values, 8), bytes.size(), "model");

  Matrix w_in = r.matrix(n, k);
  Matrix w = r.matrix(n, n);
  Matrix w_fb = r.matrix(n, l);
  Matrix w_out = r.matrix(l, n);

  RegressionMethod rm;
  switch (method) {
    case 0: rm = Ridge{lambda}; break;
    case 1: rm = Linear{}; break;
    case 2: rm = Lasso{lambda, static_cast<std::size_t>(max_iter), tol}; break;
    default: throw FormatError("model header has unknown regression method " + std::to_string(method));
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("model header holds an invalid reservoir config: ") + e.what());
  }
  return ModelArtifact{Reservoir::from_parts(cfg, std::move(w_in), std::move(w), std::move(w_fb), achieved),
                       ReadoutModel{std::move(w_out), rm}, std::move(prov)};
}

// ---------------------------------------------------------------------------
// Dataset container

namespace {

void write_dataset_header(Writer& w, const SequenceDataset& ds) {
  const DatasetMeta& meta = ds.meta;
  w.bytes(kDatasetMagic, 4);
  w.u32(kDatasetFormatVersion);
  w.u64(ds.num_sequences());
  w.u64(ds.seq_len);
  w.u64(ds.input_dim);
  w.u64(ds.output_dim);
  w.u64(meta.seed);
  w.u64(meta.waveform.samples_per_symbol);
  w.f64(meta.waveform.rolloff);
  w.u64(meta.waveform.filter_span);
  w.u64(meta.waveform.sequence_length);
  const auto* mp = std::get_if<MultipathChannel>(&meta.channel);
  w.u8(mp != nullptr ? 1 : 0);
  w.zeros(7);
  w.f64(snr_db_of(meta.channel));
  w.f64(mp != nullptr ? mp->disturbance : 0.0);
  w.u64(mp != nullptr ? mp->disturbance_period : 0);
  const std::size_t taps = mp != nullptr ? mp->taps.size() : 0;
  if (taps > kMaxStoredTaps) {
    throw ConfigError("save_dataset: channel has " + std::to_string(taps) + " taps; the format stores at most " +
                      std::to_string(kMaxStoredTaps));
  }
  w.u64(taps);
  for (std::size_t i = 0; i < kMaxStoredTaps; ++i) {
    const Tap tap = i < taps ? mp->taps[i] : Tap{0, 0.0, 0.0};
    w.u64(tap.delay);
    w.f64(tap.gain_i);
    w.f64(tap.gain_q);
  }
  w.fixed_string(meta.preset, kPresetFieldBytes);
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(const SequenceDataset& ds) {
  ds.validate();
  std::vector<std::uint8_t> out;
  out.reserve(kDatasetHeaderBytes + ds.num_sequences() * ds.seq_len * (ds.input_dim + ds.output_dim) * 8);
  Writer w(out);
  write_dataset_header(w, ds);
  const std::uint64_t header_hash =
      fnv1a(std::string_view(reinterpret_cast<const char*>(out.data()), out.size()));
  w.u64(header_hash);
  if (w.size() != kDatasetHeaderBytes) throw std::logic_error("dataset header layout drifted");
  for (std::size_t s = 0; s < ds.num_sequences(); ++s) {
    w.matrix(ds.inputs[s]);
    w.matrix(ds.targets[s]);
  }
  return out;
}

SequenceDataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4) throw FormatError("not a dataset file: shorter than the magic bytes");
  check_magic(r, kDatasetMagic, "dataset");
  if (bytes.size() < kDatasetHeaderBytes) {
    throw IntegrityError("dataset header truncated: " + std::to_string(bytes.size()) + " of " +
                             std::to_string(kDatasetHeaderBytes) + " bytes",
                         kDatasetHeaderBytes, bytes.size());
  }
  check_version(r.u32(), kDatasetFormatVersion, "dataset");
  SequenceDataset ds;
  const std::size_t count = r.u64();
  ds.seq_len = r.u64();
  ds.input_dim = r.u64();
  ds.output_dim = r.u64();
  if (ds.input_dim != 2 || ds.output_dim != 2) {
    throw ShapeError("dataset header declares K=" + std::to_string(ds.input_dim) + ", L=" +
                     std::to_string(ds.output_dim) + "; I/Q datasets require K = L = 2");
  }
  DatasetMeta& meta = ds.meta;
  meta.seed = r.u64();
  meta.waveform.samples_per_symbol = r.u64();
  meta.waveform.rolloff = r.f64();
  meta.waveform.filter_span = r.u64();
  meta.waveform.sequence_length = r.u64();
  meta.waveform.seed = meta.seed;
  const std::uint8_t kind = r.u8();
  r.skip(7);
  const double snr_db = r.f64();
  const double disturbance = r.f64();
  const std::uint64_t period = r.u64();
  const std::uint64_t taps = r.u64();
  if (kind > 1 || taps > kMaxStoredTaps) throw FormatError("dataset header has an invalid channel block");
  std::vector<Tap> tap_list;
  for (std::size_t i = 0; i < kMaxStoredTaps; ++i) {
    Tap tap;
    tap.delay = r.u64();
    tap.gain_i = r.f64();
    tap.gain_q = r.f64();
    if (i < taps) tap_list.push_back(tap);
  }
  if (kind == 0) {
    meta.channel = AwgnChannel{snr_db};
  } else {
    meta.channel = MultipathChannel{std::move(tap_list), disturbance, static_cast<std::size_t>(period), snr_db};
  }
  meta.preset = r.fixed_string(kPresetFieldBytes);
  const std::size_t hashed = r.pos();
  const std::uint64_t stored_hash = r.u64();
  const std::uint64_t actual_hash =
      fnv1a(std::string_view(reinterpret_cast<const char*>(bytes.data()), hashed));
  if (stored_hash != actual_hash) {
    throw IntegrityError("dataset header checksum mismatch", kDatasetHeaderBytes, kDatasetHeaderBytes);
  }

  const std::size_t per_seq = checked_mul(ds.seq_len, ds.input_dim + ds.output_dim);
  check_size(kDatasetHeaderBytes + checked_mul(checked_mul(count, per_seq), 8), bytes.size(), "dataset");
  ds.inputs.reserve(count);
  ds.targets.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    ds.inputs.push_back(r.matrix(ds.input_dim, ds.seq_len));
    ds.targets.push_back(r.matrix(ds.output_dim, ds.seq_len));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Files

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw DataError("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw DataError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("failed reading '" + path.string() + "'");
  return bytes;
}

void save_model(const ModelArtifact& artifact, const std::filesystem::path& path) {
  write_file_atomic(path, encode_model(artifact));
}

ModelArtifact load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

void save_dataset(const SequenceDataset& ds, const std::filesystem::path& path) {
  write_file_atomic(path, encode_dataset(ds));
}

SequenceDataset load_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

void write_sequence_csv(std::ostream& os, const SequenceDataset& ds, std::size_t index) {
  if (ds.input_dim != 2 || ds.output_dim != 2) {
    throw ShapeError("CSV export requires I/Q data (K = L = 2)");
  }
  if (index >= ds.num_sequences()) {
    throw ShapeError("CSV export: sequence " + std::to_string(index) + " out of range");
  }
  const Matrix& tx = ds.inputs[index];
  const Matrix& rx = ds.targets[index];
  os << "t,i_tx,q_tx,i_rx,q_rx\n";
  for (std::size_t t = 0; t < ds.seq_len; ++t) {
    os << t << ',' << format_double(tx(0, t)) << ',' << format_double(tx(1, t)) << ','
       << format_double(rx(0, t)) << ',' << format_double(rx(1, t)) << '\n';
  }
}

std::vector<std::filesystem::path> export_dataset_csv(const SequenceDataset& ds,
                                                      const std::filesystem::path& dir,
                                                      const std::string& stem) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());
  const std::size_t digits = std::to_string(std::max<std::size_t>(1, ds.num_sequences()) - 1).size();
  std::vector<std::filesystem::path> paths;
  for (std::size_t s = 0; s < ds.num_sequences(); ++s) {
    std::ostringstream name;
    name << stem << '_' << std::setw(static_cast<int>(digits)) << std::setfill('0') << s << ".csv";
    std::ostringstream body;
    write_sequence_csv(body, ds, s);
    const std::string text = body.str();
    const auto path = dir / name.str();
    write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
    paths.push_back(path);
  }
  return paths;
}

}  // namespace echochan

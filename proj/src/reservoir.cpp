#include "echochan/reservoir.hpp"

#include <algorithm>
#include <cmath>

#include "echochan/error.hpp"
#include "echochan/rng.hpp"
#include "eigen_bridge.hpp"

namespace echochan {

using detail::view;

std::string_view to_string(InitMethod m) {
  switch (m) {
    case InitMethod::Random: return "random";
    case InitMethod::Xavier: return "xavier";
    case InitMethod::NormalizedXavier: return "normalized_xavier";
    case InitMethod::He: return "he";
  }
  return "unknown";
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "unknown";
}

InitMethod parse_init_method(std::string_view name) {
  if (name == "random") return InitMethod::Random;
  if (name == "xavier") return InitMethod::Xavier;
  if (name == "normalized_xavier" || name == "glorot") return InitMethod::NormalizedXavier;
  if (name == "he") return InitMethod::He;
  throw ConfigError("unknown init method '" + std::string(name) +
                    "' (expected random, xavier, normalized_xavier, he)");
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw ConfigError("unknown activation '" + std::string(name) +
                    "' (expected tanh, relu, sigmoid)");
}

double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::Tanh: return std::tanh(x);
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

void ReservoirConfig::validate() const {
  if (input_dim == 0 || reservoir_size == 0 || output_dim == 0) {
    throw ConfigError("reservoir: input_dim, reservoir_size and output_dim must all be >= 1");
  }
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw ConfigError("reservoir: sparsity must lie in [0, 1], got " + std::to_string(sparsity));
  }
  if (!allow_unstable && !(target_spectral_radius > 0.0 && target_spectral_radius <= 1.0)) {
    throw ConfigError("reservoir: spectral radius must lie in (0, 1] for the echo state "
                      "condition, got " + std::to_string(target_spectral_radius) +
                      " (set allow_unstable for raw-radius diagnostics)");
  }
}

Matrix init_matrix(InitMethod method, std::size_t rows, std::size_t cols, double sparsity,
                   std::uint64_t seed) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("init_matrix: shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " must be at least 1x1");
  }
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) {
    throw ConfigError("init_matrix: sparsity must lie in [0, 1]");
  }
  const double fan_in = static_cast<double>(cols);
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.data()) {
    switch (method) {
      case InitMethod::Random: v = rng.uniform(-1.0, 1.0); break;
      case InitMethod::Xavier: {
        const double bound = 1.0 / std::sqrt(fan_in);
        v = rng.uniform(-bound, bound);
        break;
      }
      case InitMethod::NormalizedXavier: {
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        v = rng.uniform(-bound, bound);
        break;
      }
      case InitMethod::He: v = rng.normal(0.0, std::sqrt(2.0 / fan_in)); break;
    }
    // The keep/drop draw is made for every entry so the value stream does not
    // depend on sparsity.
    if (!rng.bernoulli(sparsity)) v = 0.0;
  }
  return m;
}

Matrix rescale_to_radius(const Matrix& w, double target, const SpectralOptions& opts) {
  if (!w.is_square()) throw ShapeError("rescale_to_radius: matrix " + w.shape_string() + " is not square");
  if (!(target > 0.0)) throw ConfigError("rescale_to_radius: target must be positive");
  const double radius = spectral_radius(w, opts);
  if (!(radius > 0.0)) {
    throw CannotRescaleError("rescale_to_radius: matrix has zero spectral radius");
  }
  return (target / radius) * w;
}

Reservoir Reservoir::from_parts(ReservoirConfig config, Matrix w_in, Matrix w, Matrix w_fb,
                                double achieved_radius) {
  config.validate();
  const auto n = config.reservoir_size;
  if (w_in.rows() != n || w_in.cols() != config.input_dim || w.rows() != n || w.cols() != n ||
      w_fb.rows() != n || w_fb.cols() != config.output_dim) {
    throw ShapeError("reservoir: weight shapes w_in " + w_in.shape_string() + ", w " +
                     w.shape_string() + ", w_fb " + w_fb.shape_string() +
                     " do not match N=" + std::to_string(n) + " K=" +
                     std::to_string(config.input_dim) + " L=" + std::to_string(config.output_dim));
  }
  Reservoir r;
  r.config_ = config;
  r.w_in_ = std::move(w_in);
  r.w_ = std::move(w);
  r.w_fb_ = std::move(w_fb);
  r.achieved_radius_ = achieved_radius;
  return r;
}

Reservoir build(const ReservoirConfig& config) {
  config.validate();
  const auto n = config.reservoir_size;
  Reservoir r;
  r.config_ = config;
  r.w_in_ = init_matrix(config.init, n, config.input_dim, 1.0, derive_seed(config.seed, "w_in"));
  Matrix raw = init_matrix(config.init, n, n, config.sparsity, derive_seed(config.seed, "w"));
  const double raw_radius = spectral_radius(raw);
  if (config.allow_unstable) {
    r.w_ = std::move(raw);
    r.achieved_radius_ = raw_radius;
  } else {
    if (!(raw_radius > 0.0)) {
      throw CannotRescaleError("reservoir: W has zero spectral radius (sparsity " +
                               std::to_string(config.sparsity) + "); cannot rescale");
    }
    // Eigenvalues scale linearly, so the achieved radius follows from raw_radius.
    const double factor = config.target_spectral_radius / raw_radius;
    r.w_ = factor * std::move(raw);
    r.achieved_radius_ = raw_radius * factor;
  }
  r.w_fb_ = config.use_feedback
                ? init_matrix(config.init, n, config.output_dim, 1.0, derive_seed(config.seed, "w_fb"))
                : Matrix(n, config.output_dim);
  return r;
}

namespace {

using ColMajor = Eigen::MatrixXd;

void activate_inplace(Activation a, ColMajor& x) {
  switch (a) {
    case Activation::Tanh: x = x.array().tanh(); break;
    case Activation::Relu: x = x.array().max(0.0); break;
    case Activation::Sigmoid: x = (1.0 + (-x.array()).exp()).inverse(); break;
  }
}

void check_sequence(const Reservoir& r, const Matrix& input, const Matrix* teacher,
                    std::size_t expected_len) {
  if (input.rows() != r.input_dim()) {
    throw ShapeError("harvest: input has " + std::to_string(input.rows()) +
                     " rows, reservoir expects K=" + std::to_string(r.input_dim()));
  }
  if (input.cols() != expected_len) {
    throw ShapeError("harvest: sequences in a batch must share one length (" +
                     std::to_string(input.cols()) + " vs " + std::to_string(expected_len) + ")");
  }
  if (teacher != nullptr &&
      (teacher->rows() != r.output_dim() || teacher->cols() != input.cols())) {
    throw ShapeError("harvest: teacher " + teacher->shape_string() + " does not match L=" +
                     std::to_string(r.output_dim()) + " x T=" + std::to_string(input.cols()));
  }
}

// Runs S sequences in lockstep; column s of `state` is sequence s. Each column gets its own
// matrix-vector product, so a trajectory is bit-identical whatever batch it was run in.
std::vector<StateTrajectory> run(const Reservoir& r, ColMajor state,
                                 std::span<const Matrix> inputs,
                                 std::span<const Matrix> teachers) {
  const auto& cfg = r.config();
  const std::size_t count = inputs.size();
  if (count == 0) return {};
  const std::size_t len = inputs.front().cols();
  const bool feedback = cfg.use_feedback;
  if (feedback && teachers.size() != count) {
    throw ConfigError("harvest: feedback is enabled, so a teacher sequence is required");
  }
  if (!feedback && !teachers.empty()) {
    throw ConfigError("harvest: teacher sequences given but feedback is disabled");
  }
  for (std::size_t s = 0; s < count; ++s) {
    check_sequence(r, inputs[s], teachers.empty() ? nullptr : &teachers[s], len);
  }
  if (len <= cfg.washout) {
    throw EmptyTrajectoryError("harvest: sequence length " + std::to_string(len) +
                               " does not exceed washout " + std::to_string(cfg.washout));
  }

  const auto n = static_cast<Eigen::Index>(r.size());
  const auto k = static_cast<Eigen::Index>(r.input_dim());
  const auto l = static_cast<Eigen::Index>(r.output_dim());
  const auto s_count = static_cast<Eigen::Index>(count);
  const ColMajor w = view(r.w());
  const ColMajor w_in = view(r.w_in());
  const ColMajor w_fb = view(r.w_fb());

  // Column-major staging keeps the per-step writes contiguous.
  const auto kept = static_cast<Eigen::Index>(len - cfg.washout);
  std::vector<ColMajor> staged(count, ColMajor(n, kept));

  ColMajor u(k, s_count);
  ColMajor y_prev = ColMajor::Zero(l, s_count);
  ColMajor pre(n, s_count);
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t s = 0; s < count; ++s)
      for (Eigen::Index i = 0; i < k; ++i)
        u(i, static_cast<Eigen::Index>(s)) = inputs[s](static_cast<std::size_t>(i), t);
    for (Eigen::Index c = 0; c < s_count; ++c) {
      pre.col(c).noalias() = w_in * u.col(c);
      pre.col(c).noalias() += w * state.col(c);
      if (feedback) pre.col(c).noalias() += w_fb * y_prev.col(c);
    }
    activate_inplace(cfg.activation, pre);
    state.swap(pre);
    if (feedback) {
      for (std::size_t s = 0; s < count; ++s)
        for (Eigen::Index i = 0; i < l; ++i)
          y_prev(i, static_cast<Eigen::Index>(s)) = teachers[s](static_cast<std::size_t>(i), t);
    }
    if (t >= cfg.washout) {
      const auto col = static_cast<Eigen::Index>(t - cfg.washout);
      for (std::size_t s = 0; s < count; ++s) {
        staged[s].col(col) = state.col(static_cast<Eigen::Index>(s));
      }
    }
  }
  std::vector<StateTrajectory> out(count);
  for (std::size_t s = 0; s < count; ++s) {
    if (!staged[s].allFinite()) {
      throw NonFiniteError("harvest: reservoir states diverged to non-finite values");
    }
    out[s].states = detail::to_matrix(staged[s]);
    out[s].t_offset = cfg.washout;
  }
  return out;
}

}  // namespace

Vector update_state(const Reservoir& r, const Vector& x_prev, const Vector& u,
                    const Vector& y_prev) {
  if (x_prev.size() != r.size() || u.size() != r.input_dim() || y_prev.size() != r.output_dim()) {
    throw ShapeError("update_state: got x_prev[" + std::to_string(x_prev.size()) + "], u[" +
                     std::to_string(u.size()) + "], y_prev[" + std::to_string(y_prev.size()) +
                     "], reservoir expects N=" + std::to_string(r.size()) + ", K=" +
                     std::to_string(r.input_dim()) + ", L=" + std::to_string(r.output_dim()));
  }
  Vector pre = matvec(r.w_in(), u);
  const Vector rec = matvec(r.w(), x_prev);
  const Vector fb = matvec(r.w_fb(), y_prev);
  for (std::size_t i = 0; i < pre.size(); ++i) {
    pre[i] = apply_activation(r.config().activation, pre[i] + rec[i] + fb[i]);
  }
  return pre;
}

StateTrajectory harvest(const Reservoir& r, const Matrix& inputs, const std::optional<Matrix>& teacher) {
  return harvest_from(r, Vector(r.size()), inputs, teacher);
}

StateTrajectory harvest_from(const Reservoir& r, const Vector& x0, const Matrix& inputs,
                             const std::optional<Matrix>& teacher) {
  if (x0.size() != r.size()) {
    throw ShapeError("harvest: initial state has length " + std::to_string(x0.size()) +
                     ", reservoir has N=" + std::to_string(r.size()));
  }
  ColMajor state(static_cast<Eigen::Index>(r.size()), 1);
  for (std::size_t i = 0; i < x0.size(); ++i) state(static_cast<Eigen::Index>(i), 0) = x0[i];
  std::span<const Matrix> teachers;
  if (teacher) teachers = std::span<const Matrix>(&*teacher, 1);
  auto out = run(r, std::move(state), std::span<const Matrix>(&inputs, 1), teachers);
  return std::move(out.front());
}

std::vector<StateTrajectory> harvest_batch(const Reservoir& r, std::span<const Matrix> inputs,
                                           std::span<const Matrix> teachers) {
  if (!teachers.empty() && teachers.size() != inputs.size()) {
    throw ShapeError("harvest_batch: " + std::to_string(teachers.size()) + " teachers for " +
                     std::to_string(inputs.size()) + " inputs");
  }
  return run(r, ColMajor::Zero(static_cast<Eigen::Index>(r.size()),
                               static_cast<Eigen::Index>(inputs.size())),
             inputs, teachers);
}

}  // namespace echochan

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "echochan/matrix.hpp"
#include "echochan/numerics.hpp"

namespace echochan {

enum class InitMethod : std::uint8_t { Random = 0, Xavier = 1, NormalizedXavier = 2, He = 3 };
enum class Activation : std::uint8_t { Tanh = 0, Relu = 1, Sigmoid = 2 };

std::string_view to_string(InitMethod m);
std::string_view to_string(Activation a);
/// Accepts "random", "xavier", "normalized_xavier" (alias "glorot"), "he".
InitMethod parse_init_method(std::string_view name);
/// Accepts "tanh", "relu", "sigmoid".
Activation parse_activation(std::string_view name);

double apply_activation(Activation a, double x);

struct ReservoirConfig {
  std::size_t input_dim = 2;       // K
  std::size_t reservoir_size = 578;  // N
  std::size_t output_dim = 2;      // L
  InitMethod init = InitMethod::Xavier;
  /// Probability that a reservoir entry is non-zero.
  double sparsity = 1.0;
  double target_spectral_radius = 0.5;
  Activation activation = Activation::Tanh;
  bool use_feedback = false;
  std::size_t washout = 0;
  std::uint64_t seed = 0;
  /// Skip rescaling and permit target radii above 1 (raw-radius diagnostics).
  bool allow_unstable = false;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  friend bool operator==(const ReservoirConfig&, const ReservoirConfig&) = default;
};

/// Fixed random reservoir. Weights are frozen after build().
class Reservoir {
 public:
  const ReservoirConfig& config() const noexcept { return config_; }
  const Matrix& w_in() const noexcept { return w_in_; }
  const Matrix& w() const noexcept { return w_; }
  const Matrix& w_fb() const noexcept { return w_fb_; }
  double achieved_radius() const noexcept { return achieved_radius_; }

  std::size_t input_dim() const noexcept { return config_.input_dim; }
  std::size_t size() const noexcept { return config_.reservoir_size; }
  std::size_t output_dim() const noexcept { return config_.output_dim; }

  /// Reassembles a reservoir from stored parts, validating shapes.
  static Reservoir from_parts(ReservoirConfig config, Matrix w_in, Matrix w, Matrix w_fb,
                              double achieved_radius);

  friend bool operator==(const Reservoir&, const Reservoir&) = default;

 private:
  friend Reservoir build(const ReservoirConfig& config);

  ReservoirConfig config_;
  Matrix w_in_;
  Matrix w_;
  Matrix w_fb_;
  double achieved_radius_ = 0.0;
};

/// Harvested states x(t) for t > washout, one column per step.
struct StateTrajectory {
  Matrix states;  // N x (T - washout)
  std::size_t t_offset = 0;

  std::size_t steps() const noexcept { return states.cols(); }
};

/// Random matrix under `method`, each entry then kept with probability
/// `sparsity`. Distributions (fan_in = cols):
///   Random            uniform[-1, 1]
///   Xavier            uniform[-1/sqrt(fan_in), 1/sqrt(fan_in)]
///   NormalizedXavier  uniform[-sqrt(6/(rows+cols)), sqrt(6/(rows+cols))]
///   He                normal(0, sqrt(2/fan_in))
Matrix init_matrix(InitMethod method, std::size_t rows, std::size_t cols, double sparsity,
                   std::uint64_t seed);

/// w scaled so its spectral radius equals target.
Matrix rescale_to_radius(const Matrix& w, double target, const SpectralOptions& opts = {});

/// Substreams: w_in uses derive_seed(seed, "w_in"), w uses "w", w_fb uses "w_fb".
Reservoir build(const ReservoirConfig& config);

/// x(t) = f(W_in u + W x_prev + W_fb y_prev).
Vector update_state(const Reservoir& r, const Vector& x_prev, const Vector& u, const Vector& y_prev);

/// Drives the reservoir from x(0) = 0 with inputs (K x T). When feedback is
/// enabled, `teacher` (L x T) supplies y(t-1), with y(0) = 0.
StateTrajectory harvest(const Reservoir& r, const Matrix& inputs,
                        const std::optional<Matrix>& teacher = std::nullopt);

/// Same as harvest() but starting from an arbitrary initial state.
StateTrajectory harvest_from(const Reservoir& r, const Vector& x0, const Matrix& inputs,
                             const std::optional<Matrix>& teacher = std::nullopt);

/// Harvests several equal-length sequences in lockstep, which turns the
/// per-step matrix-vector products into one matrix-matrix product.
/// `teachers` must be empty or have one entry per input.
std::vector<StateTrajectory> harvest_batch(const Reservoir& r, std::span<const Matrix> inputs,
                                           std::span<const Matrix> teachers = {});

}  // namespace echochan

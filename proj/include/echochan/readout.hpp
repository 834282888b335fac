#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>

#include "echochan/matrix.hpp"
#include "echochan/dataset.hpp"
#include "echochan/reservoir.hpp"

namespace echochan {


struct Ridge {
  double lambda = 1e-6;
  friend bool operator==(const Ridge&, const Ridge&) = default;
};

struct Linear {
  friend bool operator==(const Linear&, const Linear&) = default;
};

/// L1-penalized readout: minimizes ||Y - W X||^2 + lambda * sum |W_ij| by
/// cyclic coordinate descent on the normal equations.
struct Lasso {
  double lambda = 1e-3;
  std::size_t max_iter = 10'000;
  double tol = 1e-8;
  friend bool operator==(const Lasso&, const Lasso&) = default;
};

using RegressionMethod = std::variant<Ridge, Linear, Lasso>;

std::string describe(const RegressionMethod& method);
/// Validates lambda / iteration parameters; throws ConfigError.
void validate(const RegressionMethod& method);

/// Sufficient statistics of a linear readout fit:
///   a = sum_i Y_i X_i^T   (L x N)
///   b = sum_i X_i X_i^T   (N x N, exactly symmetric)
struct Accumulators {
  Matrix a;
  Matrix b;
  std::size_t samples_seen = 0;

  static Accumulators zeros(std::size_t output_dim, std::size_t reservoir_size);

  std::size_t output_dim() const noexcept { return a.rows(); }
  std::size_t reservoir_size() const noexcept { return b.rows(); }

  /// Adds another accumulator of the same shape.
  Accumulators& merge(const Accumulators& other);
};

/// Folds one trajectory and its L x T_effective targets into acc.
Accumulators accumulate(Accumulators acc, const StateTrajectory& states, const Matrix& targets);
void accumulate_into(Accumulators& acc, const StateTrajectory& states, const Matrix& targets);

/// Output layer with identity output activation: y(t) = W_out x(t).
struct ReadoutModel {
  Matrix w_out;  // L x N
  RegressionMethod method = Ridge{};
};

ReadoutModel solve(const Accumulators& acc, const RegressionMethod& method);

Matrix predict(const ReadoutModel& model, const StateTrajectory& states);
Matrix predict(const ReadoutModel& model, const Matrix& states);

struct FitOptions {
  /// Sequences harvested in lockstep per chunk.
  std::size_t batch_size = 32;
  /// Worker threads for harvesting; 0 means hardware concurrency.
  std::size_t threads = 0;
};

/// Harvests every sequence of the dataset and accumulates a, b. Chunk
/// partials are merged in chunk order, so the result does not depend on the
/// thread count.
Accumulators accumulate_dataset(const Reservoir& reservoir, const SequenceDataset& dataset,
                                const FitOptions& opts = {});

ReadoutModel fit(const Reservoir& reservoir, const SequenceDataset& dataset,
                 const RegressionMethod& method, const FitOptions& opts = {});

/// Ridge stationarity residual ||2 (W b - a) + 2 lambda W||_inf.
double ridge_gradient_norm(const Matrix& w_out, const Accumulators& acc, double lambda);

}  // namespace echochan

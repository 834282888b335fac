#include "echochan/readout.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "echochan/error.hpp"
#include "echochan/numerics.hpp"
#include "eigen_bridge.hpp"

namespace echochan {

using detail::view;

std::string describe(const RegressionMethod& method) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Ridge>) {
          os << "ridge(lambda=" << m.lambda << ")";
        } else if constexpr (std::is_same_v<T, Linear>) {
          os << "linear";
        } else {
          os << "lasso(lambda=" << m.lambda << ", max_iter=" << m.max_iter << ", tol=" << m.tol << ")";
        }
      },
      method);
  return os.str();
}

void validate(const RegressionMethod& method) {
  if (const auto* r = std::get_if<Ridge>(&method)) {
    if (!std::isfinite(r->lambda) || r->lambda < 0.0) {
      throw ConfigError("ridge: lambda must be finite and >= 0");
    }
  } else if (const auto* l = std::get_if<Lasso>(&method)) {
    if (!std::isfinite(l->lambda) || l->lambda <= 0.0) {
      throw ConfigError("lasso: lambda must be finite and > 0");
    }
    if (l->max_iter < 1) throw ConfigError("lasso: max_iter must be >= 1");
    if (!(l->tol > 0.0)) throw ConfigError("lasso: tol must be > 0");
  }
}

Accumulators Accumulators::zeros(std::size_t output_dim, std::size_t reservoir_size) {
  return Accumulators{Matrix(output_dim, reservoir_size), Matrix(reservoir_size, reservoir_size), 0};
}

Accumulators& Accumulators::merge(const Accumulators& other) {
  if (other.a.rows() != a.rows() || other.b.rows() != b.rows()) {
    throw ShapeError("accumulators: cannot merge a " + other.a.shape_string() + " into a " +
                     a.shape_string());
  }
  a += other.a;
  b += other.b;
  samples_seen += other.samples_seen;
  return *this;
}

void accumulate_into(Accumulators& acc, const StateTrajectory& states, const Matrix& targets) {
  const Matrix& x = states.states;
  if (x.rows() != acc.reservoir_size() || targets.rows() != acc.output_dim() ||
      targets.cols() != x.cols()) {
    throw ShapeError("accumulate: states " + x.shape_string() + " and targets " +
                     targets.shape_string() + " do not fit accumulators with L=" +
                     std::to_string(acc.output_dim()) + ", N=" +
                     std::to_string(acc.reservoir_size()));
  }
  if (x.cols() == 0) return;
  view(acc.a).noalias() += view(targets) * view(x).transpose();
  // Lower triangle only, then mirrored: b stays exactly symmetric.
  Eigen::MatrixXd b = view(acc.b);
  b.selfadjointView<Eigen::Lower>().rankUpdate(view(x));
  b.triangularView<Eigen::StrictlyUpper>() = b.transpose();
  view(acc.b) = b;
  acc.samples_seen += x.cols();
}

Accumulators accumulate(Accumulators acc, const StateTrajectory& states, const Matrix& targets) {
  accumulate_into(acc, states, targets);
  return acc;
}

namespace {

Matrix solve_regularized(const Accumulators& acc, double lambda) {
  Matrix m = acc.b;
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += lambda;
  return solve_spd(m, acc.a.transposed()).transposed();
}

Matrix solve_lasso(const Accumulators& acc, const Lasso& opts) {
  const std::size_t n = acc.reservoir_size();
  const std::size_t l = acc.output_dim();
  const Matrix& b = acc.b;
  const double threshold = opts.lambda / 2.0;
  Matrix w(l, n);
  std::vector<double> bw(n);  // running b * w for the current output row
  for (std::size_t r = 0; r < l; ++r) {
    std::fill(bw.begin(), bw.end(), 0.0);
    std::size_t iter = 0;
    for (;; ++iter) {
      if (iter == opts.max_iter) {
        throw ConvergenceError("lasso: coordinate descent did not converge within " +
                                   std::to_string(opts.max_iter) + " iterations",
                               opts.max_iter);
      }
      double max_change = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double bjj = b(j, j);
        const double old = w(r, j);
        double updated = 0.0;
        if (bjj > 0.0) {
          const double rho = acc.a(r, j) - bw[j] + bjj * old;
          const double shrunk = std::abs(rho) > threshold ? rho - std::copysign(threshold, rho) : 0.0;
          updated = shrunk / bjj;
        }
        const double delta = updated - old;
        if (delta != 0.0) {
          w(r, j) = updated;
          const auto col = b.row(j);  // b symmetric: row j == column j
          for (std::size_t i = 0; i < n; ++i) bw[i] += col[i] * delta;
          max_change = std::max(max_change, std::abs(delta));
        }
      }
      if (max_change < opts.tol) break;
    }
  }
  return w;
}

}  // namespace

ReadoutModel solve(const Accumulators& acc, const RegressionMethod& method) {
  validate(method);
  ReadoutModel model;
  model.method = method;
  if (const auto* ridge = std::get_if<Ridge>(&method)) {
    model.w_out = solve_regularized(acc, ridge->lambda);
  } else if (std::holds_alternative<Linear>(method)) {
    try {
      model.w_out = solve_regularized(acc, 0.0);
    } catch (const DefinitenessError&) {
      throw RankError("linear readout: state Gram matrix is singular (" +
                      std::to_string(acc.samples_seen) +
                      " samples); use ridge regression with lambda > 0");
    }
  } else {
    model.w_out = solve_lasso(acc, std::get<Lasso>(method));
  }
  if (!model.w_out.all_finite()) throw NonFiniteError("readout: solution is not finite");
  return model;
}

Matrix predict(const ReadoutModel& model, const Matrix& states) {
  if (states.rows() != model.w_out.cols()) {
    throw ShapeError("predict: states have N=" + std::to_string(states.rows()) +
                     " but readout expects N=" + std::to_string(model.w_out.cols()));
  }
  return matmul(model.w_out, states);
}

Matrix predict(const ReadoutModel& model, const StateTrajectory& states) {
  return predict(model, states.states);
}

namespace {

void check_dims(const Reservoir& reservoir, const SequenceDataset& dataset) {
  if (dataset.input_dim != reservoir.input_dim() || dataset.output_dim != reservoir.output_dim()) {
    throw ShapeError("dataset has K=" + std::to_string(dataset.input_dim) + ", L=" +
                     std::to_string(dataset.output_dim) + " but reservoir expects K=" +
                     std::to_string(reservoir.input_dim()) + ", L=" +
                     std::to_string(reservoir.output_dim()));
  }
}

std::vector<StateTrajectory> harvest_chunk(const Reservoir& reservoir, const SequenceDataset& dataset,
                                           std::size_t first, std::size_t count) {
  const auto inputs = std::span<const Matrix>(dataset.inputs).subspan(first, count);
  std::span<const Matrix> teachers;
  if (reservoir.config().use_feedback) {
    teachers = std::span<const Matrix>(dataset.targets).subspan(first, count);
  }
  return harvest_batch(reservoir, inputs, teachers);
}

}  // namespace

Accumulators accumulate_dataset(const Reservoir& reservoir, const SequenceDataset& dataset,
                                const FitOptions& opts) {
  check_dims(reservoir, dataset);
  const std::size_t batch = std::max<std::size_t>(1, opts.batch_size);
  const std::size_t total = dataset.num_sequences();
  const std::size_t chunks = (total + batch - 1) / batch;
  std::size_t threads = opts.threads == 0 ? std::thread::hardware_concurrency() : opts.threads;
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, chunks));

  auto acc = Accumulators::zeros(reservoir.output_dim(), reservoir.size());
  const std::size_t washout = reservoir.config().washout;
  // Threads only harvest; sequences are folded one at a time in dataset order, so the sums
  // do not depend on batch size or thread count.
  for (std::size_t wave = 0; wave < chunks; wave += threads) {
    const std::size_t in_wave = std::min(threads, chunks - wave);
    std::vector<std::vector<StateTrajectory>> harvested(in_wave);
    std::vector<std::exception_ptr> errors(in_wave);
    auto work = [&](std::size_t slot) {
      try {
        const std::size_t first = (wave + slot) * batch;
        harvested[slot] = harvest_chunk(reservoir, dataset, first, std::min(batch, total - first));
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    };
    if (in_wave == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t slot = 0; slot < in_wave; ++slot) pool.emplace_back(work, slot);
    }
    for (std::size_t slot = 0; slot < in_wave; ++slot) {
      if (errors[slot]) std::rethrow_exception(errors[slot]);
      const std::size_t first = (wave + slot) * batch;
      for (std::size_t i = 0; i < harvested[slot].size(); ++i) {
        const Matrix& target = dataset.targets[first + i];
        accumulate_into(acc, harvested[slot][i],
                        washout == 0 ? target : target.col_block(washout, target.cols() - washout));
      }
    }
  }
  return acc;
}

ReadoutModel fit(const Reservoir& reservoir, const SequenceDataset& dataset,
                 const RegressionMethod& method, const FitOptions& opts) {
  validate(method);
  if (dataset.empty()) throw DataError("fit: training dataset has no sequences");
  return solve(accumulate_dataset(reservoir, dataset, opts), method);
}

double ridge_gradient_norm(const Matrix& w_out, const Accumulators& acc, double lambda) {
  Matrix grad = matmul(w_out, acc.b);
  grad -= acc.a;
  grad += lambda * w_out;
  grad *= 2.0;
  return grad.max_abs();
}

}  // namespace echochan

#include "echochan/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "echochan/error.hpp"
#include "echochan/numerics.hpp"
#include "echochan/rng.hpp"

namespace echochan {

MetricAccumulator::MetricAccumulator(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("mape: epsilon must be positive");
}

void MetricAccumulator::add(const Matrix& actual, const Matrix& predicted) {
  if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols()) {
    throw ShapeError("mape: actual " + actual.shape_string() + " vs predicted " +
                     predicted.shape_string());
  }
  const auto a = actual.data();
  const auto f = predicted.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double err = a[i] - f[i];
    sum_sq_ += err * err;
    if (std::abs(a[i]) < epsilon_) {
      ++excluded_;
    } else {
      sum_ape_ += std::abs(err / a[i]);
      ++used_;
    }
  }
}

void MetricAccumulator::merge(const MetricAccumulator& other) {
  sum_ape_ += other.sum_ape_;
  sum_sq_ += other.sum_sq_;
  used_ += other.used_;
  excluded_ += other.excluded_;
}

MetricReport MetricAccumulator::report() const {
  if (used_ == 0) {
    throw DegenerateMetricError("mape: all " + std::to_string(excluded_) +
                                " samples are below epsilon; MAPE is undefined");
  }
  MetricReport r;
  r.mape_percent = 100.0 * sum_ape_ / static_cast<double>(used_);
  r.mse = sum_sq_ / static_cast<double>(used_ + excluded_);
  r.samples_used = used_;
  r.samples_excluded = excluded_;
  return r;
}

MetricReport mape(const Matrix& actual, const Matrix& predicted, double epsilon) {
  MetricAccumulator acc(epsilon);
  acc.add(actual, predicted);
  return acc.report();
}

namespace {

double default_epsilon(const SequenceDataset& ds) {
  double max_abs = 0.0;
  for (const auto& t : ds.targets) max_abs = std::max(max_abs, t.max_abs());
  // An all-zero dataset still gets a positive floor; every sample is then excluded.
  return max_abs > 0.0 ? 1e-9 * max_abs : std::numeric_limits<double>::min();
}

Matrix window(const Matrix& m, std::size_t washout) {
  return washout == 0 ? m : m.col_block(washout, m.cols() - washout);
}

void check_model(const Reservoir& reservoir, const ReadoutModel& model, const SequenceDataset& ds) {
  if (model.w_out.rows() != reservoir.output_dim() || model.w_out.cols() != reservoir.size()) {
    throw ShapeError("evaluate: readout " + model.w_out.shape_string() + " does not match reservoir N=" +
                     std::to_string(reservoir.size()) + ", L=" + std::to_string(reservoir.output_dim()));
  }
  if (ds.input_dim != reservoir.input_dim() || ds.output_dim != reservoir.output_dim()) {
    throw ShapeError("evaluate: dataset has K=" + std::to_string(ds.input_dim) + ", L=" +
                     std::to_string(ds.output_dim) + " but model expects K=" +
                     std::to_string(reservoir.input_dim()) + ", L=" +
                     std::to_string(reservoir.output_dim()));
  }
}

std::vector<Matrix> predict_chunk(const Reservoir& reservoir, const ReadoutModel& model,
                                  const SequenceDataset& ds, std::size_t first, std::size_t count) {
  std::vector<Matrix> out;
  out.reserve(count);
  if (reservoir.config().use_feedback) {
    for (std::size_t s = first; s < first + count; ++s) {
      out.push_back(predict_sequence(reservoir, model, ds.inputs[s]));
    }
    return out;
  }
  const auto trajectories =
      harvest_batch(reservoir, std::span<const Matrix>(ds.inputs).subspan(first, count));
  for (const auto& tr : trajectories) out.push_back(predict(model, tr));
  return out;
}

}  // namespace

Matrix predict_sequence(const Reservoir& reservoir, const ReadoutModel& model, const Matrix& inputs) {
  if (!reservoir.config().use_feedback) return predict(model, harvest(reservoir, inputs));
  // Free-running feedback: y(t-1) is the model's own previous prediction.
  const std::size_t len = inputs.cols();
  const std::size_t washout = reservoir.config().washout;
  if (inputs.rows() != reservoir.input_dim()) {
    throw ShapeError("predict_sequence: input has " + std::to_string(inputs.rows()) +
                     " rows, reservoir expects K=" + std::to_string(reservoir.input_dim()));
  }
  if (len <= washout) {
    throw EmptyTrajectoryError("predict_sequence: sequence length " + std::to_string(len) +
                               " does not exceed washout " + std::to_string(washout));
  }
  Matrix out(reservoir.output_dim(), len - washout);
  Vector x(reservoir.size());
  Vector y(reservoir.output_dim());
  Vector u(reservoir.input_dim());
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t k = 0; k < u.size(); ++k) u[k] = inputs(k, t);
    x = update_state(reservoir, x, u, y);
    y = matvec(model.w_out, x);
    if (t >= washout) {
      for (std::size_t l = 0; l < y.size(); ++l) out(l, t - washout) = y[l];
    }
  }
  if (!out.all_finite()) throw NonFiniteError("predict_sequence: feedback loop diverged");
  return out;
}

MetricReport evaluate(const Reservoir& reservoir, const ReadoutModel& model,
                      const SequenceDataset& dataset, const EvalOptions& opts) {
  check_model(reservoir, model, dataset);
  const double epsilon = opts.epsilon.value_or(default_epsilon(dataset));
  const std::size_t batch = std::max<std::size_t>(1, opts.batch_size);
  const std::size_t total = dataset.num_sequences();
  const std::size_t chunks = (total + batch - 1) / batch;
  std::size_t threads = opts.threads == 0 ? std::thread::hardware_concurrency() : opts.threads;
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, chunks));

  const std::size_t washout = reservoir.config().washout;
  MetricAccumulator acc(epsilon);
  for (std::size_t wave = 0; wave < chunks; wave += threads) {
    const std::size_t in_wave = std::min(threads, chunks - wave);
    std::vector<std::vector<Matrix>> predictions(in_wave);
    std::vector<std::exception_ptr> errors(in_wave);
    auto work = [&](std::size_t slot) {
      try {
        const std::size_t first = (wave + slot) * batch;
        predictions[slot] =
            predict_chunk(reservoir, model, dataset, first, std::min(batch, total - first));
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
      // Folded per sequence in dataset order, independent of batch size and threads.
      const std::size_t first = (wave + slot) * batch;
      for (std::size_t i = 0; i < predictions[slot].size(); ++i) {
        acc.add(window(dataset.targets[first + i], washout), predictions[slot][i]);
      }
    }
  }
  return acc.report();
}

namespace {

template <typename Predictor>
MetricReport reference_report(const SequenceDataset& ds, std::size_t washout,
                              std::optional<double> epsilon, Predictor predictor) {
  MetricAccumulator acc(epsilon.value_or(default_epsilon(ds)));
  for (std::size_t s = 0; s < ds.num_sequences(); ++s) {
    acc.add(window(ds.targets[s], washout), window(predictor(s), washout));
  }
  return acc.report();
}

}  // namespace

MetricReport zero_predictor_report(const SequenceDataset& dataset, std::size_t washout,
                                   std::optional<double> epsilon) {
  return reference_report(dataset, washout, epsilon, [&](std::size_t s) {
    return Matrix(dataset.targets[s].rows(), dataset.targets[s].cols());
  });
}

MetricReport identity_predictor_report(const SequenceDataset& dataset, std::size_t washout,
                                       std::optional<double> epsilon) {
  if (dataset.input_dim != dataset.output_dim) {
    throw ShapeError("identity predictor needs K == L");
  }
  return reference_report(dataset, washout, epsilon,
                          [&](std::size_t s) { return dataset.inputs[s]; });
}

// ---------------------------------------------------------------------------
// Sweeps

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::InitMethod: return "init";
    case SweepAxis::SpectralRadius: return "radius";
    case SweepAxis::ReservoirSize: return "size";
    case SweepAxis::Activation: return "activation";
    case SweepAxis::RegressionMethod: return "regression";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  for (auto axis : {SweepAxis::InitMethod, SweepAxis::SpectralRadius, SweepAxis::ReservoirSize,
                    SweepAxis::Activation, SweepAxis::RegressionMethod}) {
    if (name == to_string(axis)) return axis;
  }
  throw ConfigError("unknown sweep axis '" + std::string(name) +
                    "' (expected init, radius, size, activation, regression)");
}

std::vector<std::string> default_sweep_values(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::InitMethod: return {"random", "xavier", "normalized_xavier", "he"};
    case SweepAxis::SpectralRadius:
      return {"0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9"};
    case SweepAxis::ReservoirSize: return {"50", "100", "150", "300", "578", "600", "1200", "2400"};
    case SweepAxis::Activation: return {"tanh", "relu", "sigmoid"};
    case SweepAxis::RegressionMethod: return {"ridge", "linear", "lasso"};
  }
  return {};
}

namespace {

double parse_number(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("sweep: '" + std::string(text) + "' is not a valid " + std::string(what));
  }
  return v;
}

std::size_t parse_count(std::string_view text) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || v == 0) {
    throw ConfigError("sweep: '" + std::string(text) + "' is not a valid reservoir size");
  }
  return v;
}

// Numeric axes sort by value; categorical axes by their enum order.
double sort_key(SweepAxis axis, std::string_view value) {
  switch (axis) {
    case SweepAxis::SpectralRadius: return parse_number(value, "spectral radius");
    case SweepAxis::ReservoirSize: return static_cast<double>(parse_count(value));
    case SweepAxis::InitMethod: return static_cast<double>(parse_init_method(value));
    case SweepAxis::Activation: return static_cast<double>(parse_activation(value));
    case SweepAxis::RegressionMethod: {
      if (value == "ridge") return 0;
      if (value == "linear") return 1;
      if (value == "lasso") return 2;
      break;
    }
  }
  throw ConfigError("sweep: invalid value '" + std::string(value) + "' for axis " +
                    std::string(to_string(axis)));
}

}  // namespace

std::pair<ReservoirConfig, RegressionMethod> apply_axis_value(SweepAxis axis, std::string_view value,
                                                             const ReservoirConfig& base_config,
                                                             const RegressionMethod& base_method) {
  ReservoirConfig cfg = base_config;
  RegressionMethod method = base_method;
  switch (axis) {
    case SweepAxis::InitMethod: cfg.init = parse_init_method(value); break;
    case SweepAxis::SpectralRadius: cfg.target_spectral_radius = parse_number(value, "spectral radius"); break;
    case SweepAxis::ReservoirSize: cfg.reservoir_size = parse_count(value); break;
    case SweepAxis::Activation: cfg.activation = parse_activation(value); break;
    case SweepAxis::RegressionMethod: {
      if (value == "ridge") {
        method = std::holds_alternative<Ridge>(base_method) ? base_method : RegressionMethod{Ridge{}};
      } else if (value == "linear") {
        method = Linear{};
      } else if (value == "lasso") {
        method = std::holds_alternative<Lasso>(base_method) ? base_method : RegressionMethod{Lasso{}};
      } else {
        throw ConfigError("sweep: unknown regression method '" + std::string(value) + "'");
      }
      break;
    }
  }
  cfg.validate();
  return {cfg, method};
}

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep: no axis values given");
  if (repeats < 1) throw ConfigError("sweep: repeats must be >= 1");
  if (datasets.empty()) throw ConfigError("sweep: no datasets given");
  for (const auto& v : values) apply_axis_value(axis, v, base_config, base_method);
  for (const auto& d : datasets) {
    if (d.train.empty() || d.test.empty()) {
      throw ConfigError("sweep: dataset '" + d.name + "' needs non-empty train and test splits");
    }
  }
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<std::string> values = spec.values;
  std::stable_sort(values.begin(), values.end(), [&](const std::string& a, const std::string& b) {
    return sort_key(spec.axis, a) < sort_key(spec.axis, b);
  });

  std::vector<SweepRow> rows;
  for (const auto& value : values) {
    auto [cfg, method] = apply_axis_value(spec.axis, value, spec.base_config, spec.base_method);
    for (const auto& data : spec.datasets) {
      for (std::size_t rep = 0; rep < spec.repeats; ++rep) {
        SweepRow row{spec.axis, value, data.name, rep, 0.0, 0.0, 0.0,
                     derive_seed(spec.master_seed, rep), {}};
        cfg.seed = row.seed;
        try {
          const Reservoir reservoir = build(cfg);
          const auto start = std::chrono::steady_clock::now();
          const ReadoutModel model = fit(reservoir, data.train, method, spec.fit);
          row.train_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          EvalOptions eval_opts;
          eval_opts.batch_size = spec.fit.batch_size;
          eval_opts.threads = spec.fit.threads;
          const MetricReport report = evaluate(reservoir, model, data.test, eval_opts);
          row.mape_percent = report.mape_percent;
          row.mse = report.mse;
        } catch (const Error& e) {
          row.error = e.what();
          row.mape_percent = std::numeric_limits<double>::quiet_NaN();
          row.mse = std::numeric_limits<double>::quiet_NaN();
          row.train_seconds = std::numeric_limits<double>::quiet_NaN();
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows) {
  std::vector<SweepSummary> out;
  std::vector<std::vector<double>> mapes;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SweepSummary& s) {
      return s.value == row.value && s.dataset == row.dataset;
    });
    if (it == out.end()) {
      out.push_back(SweepSummary{row.value, row.dataset});
      mapes.emplace_back();
      it = std::prev(out.end());
    }
    const auto idx = static_cast<std::size_t>(it - out.begin());
    if (!row.error.empty()) {
      ++it->errors;
      continue;
    }
    ++it->ok;
    mapes[idx].push_back(row.mape_percent);
    it->mean_train_seconds += row.train_seconds;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& s = out[i];
    const auto& m = mapes[i];
    if (m.empty()) {
      s.mean_mape = s.std_mape = s.mean_train_seconds = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double sum = 0.0;
    for (double v : m) sum += v;
    s.mean_mape = sum / static_cast<double>(m.size());
    double ss = 0.0;
    for (double v : m) ss += (v - s.mean_mape) * (v - s.mean_mape);
    s.std_mape = m.size() > 1 ? std::sqrt(ss / static_cast<double>(m.size() - 1)) : 0.0;
    s.mean_train_seconds /= static_cast<double>(m.size());
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "axis,value,dataset,repeat,mape_percent,mse,train_seconds,seed\n";
  for (const auto& r : rows) {
    os << to_string(r.axis) << ',' << r.value << ',' << r.dataset << ',' << r.repeat << ','
       << format_double(r.mape_percent) << ',' << format_double(r.mse) << ','
       << format_double(r.train_seconds) << ',' << r.seed << '\n';
  }
}

}  // namespace echochan

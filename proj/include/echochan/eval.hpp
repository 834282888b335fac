#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "echochan/dataset.hpp"
#include "echochan/matrix.hpp"
#include "echochan/readout.hpp"
#include "echochan/reservoir.hpp"

namespace echochan {

struct MetricReport {
  double mape_percent = 0.0;
  double mse = 0.0;
  std::size_t samples_used = 0;
  std::size_t samples_excluded = 0;  // |actual| < epsilon
  double wall_time_seconds = 0.0;
};

/// Mean absolute percentage error, 100 * mean |(A - F) / A|, over samples
/// with |A| >= epsilon; the rest are excluded and counted. mse covers every
/// sample. Throws DegenerateMetricError when every sample is excluded.
MetricReport mape(const Matrix& actual, const Matrix& predicted, double epsilon);

/// Streaming form of mape() for aggregating over many sequences.
class MetricAccumulator {
 public:
  explicit MetricAccumulator(double epsilon);
  void add(const Matrix& actual, const Matrix& predicted);
  void merge(const MetricAccumulator& other);
  MetricReport report() const;

 private:
  double epsilon_;
  double sum_ape_ = 0.0;
  double sum_sq_ = 0.0;
  std::size_t used_ = 0;
  std::size_t excluded_ = 0;
};

struct EvalOptions {
  /// Absolute exclusion threshold; defaults to 1e-9 * max |actual| over the dataset.
  std::optional<double> epsilon;
  std::size_t batch_size = 32;
  std::size_t threads = 0;
};

/// Predicted received sequence (L x (T - washout)) for one input sequence.
/// With feedback enabled the model's own previous output is fed back.
Matrix predict_sequence(const Reservoir& reservoir, const ReadoutModel& model, const Matrix& inputs);

MetricReport evaluate(const Reservoir& reservoir, const ReadoutModel& model,
                      const SequenceDataset& dataset, const EvalOptions& opts = {});

/// Reference predictors on the evaluation window (t > washout).
MetricReport zero_predictor_report(const SequenceDataset& dataset, std::size_t washout = 0,
                                   std::optional<double> epsilon = std::nullopt);
MetricReport identity_predictor_report(const SequenceDataset& dataset, std::size_t washout = 0,
                                       std::optional<double> epsilon = std::nullopt);

enum class SweepAxis { InitMethod, SpectralRadius, ReservoirSize, Activation, RegressionMethod };

std::string_view to_string(SweepAxis axis);
/// Accepts init, radius, size, activation, regression.
SweepAxis parse_sweep_axis(std::string_view name);
/// radius: 0.1..0.9; size: 50..2400; init/activation/regression: every variant.
std::vector<std::string> default_sweep_values(SweepAxis axis);

struct SweepDataset {
  std::string name;
  SequenceDataset train;
  SequenceDataset test;
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::SpectralRadius;
  std::vector<std::string> values;
  ReservoirConfig base_config;
  RegressionMethod base_method = Ridge{};
  std::vector<SweepDataset> datasets;
  std::size_t repeats = 5;
  std::uint64_t master_seed = 0;
  FitOptions fit;

  void validate() const;
};

struct SweepRow {
  SweepAxis axis;
  std::string value;
  std::string dataset;
  std::size_t repeat = 0;
  double mape_percent = 0.0;
  double mse = 0.0;
  double train_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string error;  // non-empty for a failed cell; metrics are NaN then
};

/// (config, method) for one axis value applied to the base settings.
std::pair<ReservoirConfig, RegressionMethod> apply_axis_value(SweepAxis axis, std::string_view value,
                                                             const ReservoirConfig& base_config,
                                                             const RegressionMethod& base_method);

/// Every value x dataset x repeat cell: build, fit, evaluate. Repeat r uses
/// reservoir seed derive_seed(master_seed, r) for every value and dataset, so
/// cells in one repeat share their random draws. Failed cells become error
/// rows. Rows are sorted by axis value, then dataset order, then repeat.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

struct SweepSummary {
  std::string value;
  std::string dataset;
  double mean_mape = 0.0;
  double std_mape = 0.0;  // sample standard deviation
  double mean_train_seconds = 0.0;
  std::size_t ok = 0;
  std::size_t errors = 0;
};

std::vector<SweepSummary> summarize(const std::vector<SweepRow>& rows);

/// Header: axis,value,dataset,repeat,mape_percent,mse,train_seconds,seed
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// Shortest round-trip decimal representation used by every CSV writer.
std::string format_double(double v);

}  // namespace echochan

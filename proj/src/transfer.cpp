#include "echochan/transfer.hpp"

#include <chrono>

#include "echochan/error.hpp"

namespace echochan {

namespace {

void require_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("transfer: blend weight alpha must lie in [0, 1], got " + format_double(alpha));
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

PretrainResult pretrain(const Reservoir& reservoir, const SequenceDataset& source,
                        const RegressionMethod& method, const FitOptions& opts) {
  validate(method);
  if (source.empty()) throw DataError("pretrain: source dataset has no sequences");
  Accumulators acc = accumulate_dataset(reservoir, source, opts);
  ReadoutModel model = solve(acc, method);
  return PretrainResult{std::move(model), std::move(acc)};
}

MetricReport direct_transfer_eval(const Reservoir& reservoir, const ReadoutModel& model,
                                  const SequenceDataset& target_test, const EvalOptions& opts) {
  return evaluate(reservoir, model, target_test, opts);
}

Accumulators blend(const Accumulators& source, const Accumulators& target, double alpha) {
  require_alpha(alpha);
  if (source.a.rows() != target.a.rows() || source.b.rows() != target.b.rows()) {
    throw ShapeError("blend: source accumulators " + source.a.shape_string() +
                     " vs target " + target.a.shape_string());
  }
  if (alpha == 0.0) return target;
  if (alpha == 1.0) return source;
  Accumulators out{alpha * source.a, alpha * source.b, source.samples_seen + target.samples_seen};
  out.a += (1.0 - alpha) * target.a;
  out.b += (1.0 - alpha) * target.b;
  return out;
}

ReadoutModel fine_tune(const Reservoir& reservoir, const Accumulators& source_acc,
                       const SequenceDataset& target_train, double alpha,
                       const RegressionMethod& method, const FitOptions& opts) {
  require_alpha(alpha);
  validate(method);
  if (alpha == 1.0) return solve(source_acc, method);
  if (target_train.empty()) throw DataError("fine_tune: target training dataset has no sequences");
  return solve(blend(source_acc, accumulate_dataset(reservoir, target_train, opts), alpha), method);
}

void TransferPlan::validate() const {
  const bool finetune = std::holds_alternative<FineTune>(mode);
  if (source == nullptr || target_test == nullptr || (finetune && target_train == nullptr)) {
    throw ConfigError("transfer: plan is missing a dataset");
  }
  if (finetune) require_alpha(std::get<FineTune>(mode).alpha);
  auto same_dims = [&](const SequenceDataset* d, const char* name) {
    if (d == nullptr) return;
    if (d->input_dim != source->input_dim || d->output_dim != source->output_dim) {
      throw ShapeError(std::string("transfer: ") + name + " has K=" + std::to_string(d->input_dim) +
                       ", L=" + std::to_string(d->output_dim) + " but source has K=" +
                       std::to_string(source->input_dim) + ", L=" + std::to_string(source->output_dim));
    }
  };
  same_dims(target_test, "target test set");
  if (finetune) same_dims(target_train, "target training set");
}

TransferRow run_transfer(const Reservoir& reservoir, const TransferPlan& plan,
                         const RegressionMethod& method, const FitOptions& opts) {
  plan.validate();
  TransferRow row;
  row.source = plan.source_name;
  row.target = plan.target_name;
  row.seed = reservoir.config().seed;

  const auto start = std::chrono::steady_clock::now();
  PretrainResult pre = pretrain(reservoir, *plan.source, method, opts);
  ReadoutModel model = std::move(pre.model);
  if (const auto* ft = std::get_if<FineTune>(&plan.mode)) {
    row.mode = "finetune";
    row.alpha = ft->alpha;
    model = fine_tune(reservoir, pre.source_acc, *plan.target_train, ft->alpha, method, opts);
  } else {
    row.mode = "direct";
    row.alpha = 1.0;
  }
  row.train_seconds = seconds_since(start);

  EvalOptions eval_opts;
  eval_opts.batch_size = opts.batch_size;
  eval_opts.threads = opts.threads;
  const MetricReport report = direct_transfer_eval(reservoir, model, *plan.target_test, eval_opts);
  row.mape_percent = report.mape_percent;
  row.mse = report.mse;
  return row;
}

void write_transfer_csv(std::ostream& os, const std::vector<TransferRow>& rows) {
  os << "mode,alpha,source,target,mape_percent,mse,train_seconds,seed\n";
  for (const auto& r : rows) {
    os << r.mode << ',' << format_double(r.alpha) << ',' << r.source << ',' << r.target << ','
       << format_double(r.mape_percent) << ',' << format_double(r.mse) << ','
       << format_double(r.train_seconds) << ',' << r.seed << '\n';
  }
}

}  // namespace echochan

#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "echochan/dataset.hpp"
#include "echochan/eval.hpp"
#include "echochan/readout.hpp"
#include "echochan/reservoir.hpp"

namespace echochan {

// Transfer learning for ESN channel models. Only the readout moves between
// domains; the reservoir is shared and never modified.

struct PretrainResult {
  ReadoutModel model;
  Accumulators source_acc;
};

/// fit() on the source domain, also returning its accumulators.
PretrainResult pretrain(const Reservoir& reservoir, const SequenceDataset& source,
                        const RegressionMethod& method, const FitOptions& opts = {});

/// Source-trained model evaluated on target data without retraining.
MetricReport direct_transfer_eval(const Reservoir& reservoir, const ReadoutModel& model,
                                  const SequenceDataset& target_test, const EvalOptions& opts = {});

/// alpha * source + (1 - alpha) * target, entrywise.
Accumulators blend(const Accumulators& source, const Accumulators& target, double alpha);

/// Re-solves the readout on blend(source_acc, target accumulators, alpha).
/// alpha = 0 is plain target training. Blending with alpha > 0 is an
/// extension beyond re-training on target data only.
ReadoutModel fine_tune(const Reservoir& reservoir, const Accumulators& source_acc,
                       const SequenceDataset& target_train, double alpha,
                       const RegressionMethod& method, const FitOptions& opts = {});

struct DirectTransfer {};
struct FineTune {
  double alpha = 0.0;
};
using TransferMode = std::variant<DirectTransfer, FineTune>;

struct TransferPlan {
  std::string source_name;
  std::string target_name;
  const SequenceDataset* source = nullptr;
  const SequenceDataset* target_train = nullptr;  // unused for DirectTransfer
  const SequenceDataset* target_test = nullptr;
  TransferMode mode = DirectTransfer{};

  /// alpha in [0, 1]; all datasets share K and L. Throws ConfigError/ShapeError.
  void validate() const;
};

struct TransferRow {
  std::string mode;  // "direct" or "finetune"
  double alpha = 0.0;
  std::string source;
  std::string target;
  double mape_percent = 0.0;
  double mse = 0.0;
  double train_seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Pretrains on the source and evaluates per the plan's mode. train_seconds
/// covers every readout fit the mode performs.
TransferRow run_transfer(const Reservoir& reservoir, const TransferPlan& plan,
                         const RegressionMethod& method, const FitOptions& opts = {});

/// Header: mode,alpha,source,target,mape_percent,mse,train_seconds,seed
void write_transfer_csv(std::ostream& os, const std::vector<TransferRow>& rows);

}  // namespace echochan

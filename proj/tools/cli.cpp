#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "echochan/channelsim.hpp"
#include "echochan/config.hpp"
#include "echochan/error.hpp"
#include "echochan/eval.hpp"
#include "echochan/readout.hpp"
#include "echochan/reservoir.hpp"
#include "echochan/rng.hpp"
#include "echochan/store.hpp"
#include "echochan/transfer.hpp"

namespace echochan::cli {

namespace {

namespace fs = std::filesystem;

struct GlobalOptions {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
};

/// Reservoir/readout flags shared by train, sweep and transfer; unset flags
/// leave the config file's values alone.
struct ModelOverrides {
  std::optional<double> radius;
  std::optional<std::size_t> size;
  std::optional<std::string> init;
  std::optional<std::string> activation;
  std::optional<double> sparsity;
  std::optional<std::size_t> washout;
  std::optional<std::string> regression;
  std::optional<double> lambda;
  std::optional<std::size_t> max_iter;
  std::optional<double> tol;
  bool feedback = false;
  bool unstable = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--radius", radius, "Target spectral radius of W");
    cmd->add_option("--size", size, "Reservoir size N");
    cmd->add_option("--init", init, "Initializer: random, xavier, normalized_xavier, he");
    cmd->add_option("--activation", activation, "Activation: tanh, relu, sigmoid");
    cmd->add_option("--sparsity", sparsity, "Probability that a reservoir weight is non-zero");
    cmd->add_option("--washout", washout, "Initial states discarded before fitting");
    cmd->add_option("--regression", regression, "Readout: ridge, linear, lasso");
    cmd->add_option("--lambda", lambda, "Regularization strength for ridge/lasso");
    cmd->add_option("--max-iter", max_iter, "Lasso coordinate-descent sweep limit");
    cmd->add_option("--tol", tol, "Lasso convergence threshold on the largest coefficient change");
    cmd->add_flag("--feedback", feedback, "Enable output feedback (teacher forced in training)");
    cmd->add_flag("--unstable", unstable, "Skip spectral-radius normalization (raw initializer radius)");
  }

  void apply(RunConfig& cfg) const {
    ReservoirConfig& r = cfg.reservoir;
    if (radius) r.target_spectral_radius = *radius;
    if (size) r.reservoir_size = *size;
    if (init) r.init = parse_init_method(*init);
    if (activation) r.activation = parse_activation(*activation);
    if (sparsity) r.sparsity = *sparsity;
    if (washout) r.washout = *washout;
    if (feedback) r.use_feedback = true;
    if (unstable) r.allow_unstable = true;
    if (regression) {
      if (*regression == "ridge") {
        cfg.readout = Ridge{lambda.value_or(1e-6)};
      } else if (*regression == "linear") {
        cfg.readout = Linear{};
      } else if (*regression == "lasso") {
        Lasso l;
        if (lambda) l.lambda = *lambda;
        cfg.readout = l;
      } else {
        throw ConfigError("--regression: expected ridge, linear or lasso, got '" + *regression + "'");
      }
    } else if (lambda) {
      if (auto* ridge = std::get_if<Ridge>(&cfg.readout)) ridge->lambda = *lambda;
      if (auto* lasso = std::get_if<Lasso>(&cfg.readout)) lasso->lambda = *lambda;
    }
    if (max_iter || tol) {
      auto* lasso = std::get_if<Lasso>(&cfg.readout);
      if (lasso == nullptr) throw ConfigError("--max-iter and --tol apply only to the lasso readout");
      if (max_iter) lasso->max_iter = *max_iter;
      if (tol) lasso->tol = *tol;
    }
    r.validate();
    validate(cfg.readout);
  }
};

struct Context {
  RunConfig config;
  std::uint64_t master_seed = 0;
  std::size_t threads = 0;

  FitOptions fit_options() const { return FitOptions{config.batch_size, threads}; }
  EvalOptions eval_options() const {
    EvalOptions o;
    o.batch_size = config.batch_size;
    o.threads = threads;
    return o;
  }
  ReservoirConfig reservoir_config() const {
    ReservoirConfig r = config.reservoir;
    r.seed = derive_seed(master_seed, "reservoir");
    return r;
  }
};

Context make_context(const GlobalOptions& g) {
  Context ctx;
  ctx.config = load_run_config(g.config_path ? std::optional<fs::path>(*g.config_path) : std::nullopt);
  ctx.master_seed = g.seed.value_or(ctx.config.seed);
  ctx.threads = g.threads;
  return ctx;
}

std::string name_of(const fs::path& p) { return p.stem().string(); }

SequenceDataset load_checked(const std::string& path) {
  if (!fs::exists(path)) throw DataError("dataset file '" + path + "' does not exist");
  return load_dataset(path);
}

void print_report(std::ostream& out, const std::string& label, const MetricReport& r) {
  out << label << ": mape_percent=" << format_double(r.mape_percent) << " mse=" << format_double(r.mse)
      << " samples_used=" << r.samples_used << " samples_excluded=" << r.samples_excluded << '\n';
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

// --------------------------------------------------------------------------

struct GenerateArgs {
  std::string preset;
  std::size_t count = 1000;
  std::string out;
  std::optional<std::string> csv_dir;
};

int cmd_generate(const GlobalOptions& g, const GenerateArgs& a, std::ostream& out) {
  Context ctx = make_context(g);
  const ChannelSpec& chan = ctx.config.channel(a.preset);
  WaveformSpec wave = ctx.config.waveform;
  wave.seed = ctx.master_seed;
  const SequenceDataset ds = generate_dataset(wave, chan, a.count, a.preset);
  save_dataset(ds, a.out);
  out << "wrote " << a.out << ": preset=" << a.preset << " sequences=" << ds.num_sequences()
      << " T=" << ds.seq_len << " channel=" << describe(chan);
  if (!ds.empty()) out << " empirical_snr_db=" << std::fixed << std::setprecision(2) << empirical_snr_db(ds);
  out << '\n';
  if (a.csv_dir) {
    const auto files = export_dataset_csv(ds, *a.csv_dir, name_of(a.out));
    out << "exported " << files.size() << " CSV files to " << *a.csv_dir << '\n';
  }
  return kOk;
}

struct TrainArgs {
  std::string data;
  std::string out;
  std::optional<std::string> csv;
  ModelOverrides overrides;
};

void write_eval_csv(const fs::path& path, const std::string& value, const std::string& dataset,
                    const MetricReport& report, double train_seconds, std::uint64_t seed) {
  SweepRow row{SweepAxis::SpectralRadius, value, dataset, 0, report.mape_percent, report.mse,
               train_seconds, seed, {}};
  std::ostringstream os;
  write_sweep_csv(os, {row});
  // The first column names the command rather than a sweep axis.
  std::string text = os.str();
  const auto header_end = text.find('\n') + 1;
  text.replace(header_end, std::string(to_string(row.axis)).size(), "evaluate");
  write_text_atomic(path, text);
}

int cmd_train(const GlobalOptions& g, const TrainArgs& a, std::ostream& out) {
  Context ctx = make_context(g);
  a.overrides.apply(ctx.config);
  const SequenceDataset ds = load_checked(a.data);
  if (ds.num_sequences() < 2) throw DataError("train: need at least 2 sequences for a train/test split");
  const DatasetSplit split = split_dataset(ds, ctx.config.train_fraction, derive_seed(ctx.master_seed, "split"));
  if (split.train.empty() || split.test.empty()) throw DataError("train: split produced an empty partition");

  const Reservoir reservoir = build(ctx.reservoir_config());
  const auto start = std::chrono::steady_clock::now();
  ReadoutModel model = fit(reservoir, split.train, ctx.config.readout, ctx.fit_options());
  const double train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MetricReport report = evaluate(reservoir, model, split.test, ctx.eval_options());
  report.wall_time_seconds = train_seconds;

  ModelArtifact artifact{reservoir, model, Provenance{ctx.master_seed, fingerprint(split.train), tool_version()}};
  save_model(artifact, a.out);
  out << "wrote " << a.out << ": N=" << reservoir.size() << " init=" << to_string(reservoir.config().init)
      << " radius=" << format_double(reservoir.achieved_radius())
      << " activation=" << to_string(reservoir.config().activation) << " readout=" << describe(model.method)
      << " train_sequences=" << split.train.num_sequences() << " test_sequences=" << split.test.num_sequences()
      << " train_seconds=" << std::fixed << std::setprecision(3) << train_seconds << '\n';
  out.unsetf(std::ios::floatfield);
  print_report(out, "held-out", report);
  if (a.csv) write_eval_csv(*a.csv, name_of(a.out), name_of(a.data), report, train_seconds, reservoir.config().seed);
  return kOk;
}

struct EvaluateArgs {
  std::string model;
  std::string data;
  std::optional<std::string> csv;
};

int cmd_evaluate(const GlobalOptions& g, const EvaluateArgs& a, std::ostream& out) {
  Context ctx = make_context(g);
  if (!fs::exists(a.model)) throw DataError("model file '" + a.model + "' does not exist");
  const ModelArtifact artifact = load_model(a.model);
  const SequenceDataset ds = load_checked(a.data);
  const Reservoir& r = artifact.reservoir;
  if (ds.input_dim != r.input_dim() || ds.output_dim != r.output_dim()) {
    throw ShapeError("model expects K=" + std::to_string(r.input_dim()) + ", L=" + std::to_string(r.output_dim()) +
                     " (w_in " + r.w_in().shape_string() + ", w_out " + artifact.readout.w_out.shape_string() +
                     ") but dataset has K=" + std::to_string(ds.input_dim) + ", L=" + std::to_string(ds.output_dim));
  }
  const MetricReport report = evaluate(r, artifact.readout, ds, ctx.eval_options());
  print_report(out, "evaluate", report);
  if (a.csv) {
    write_eval_csv(*a.csv, name_of(a.model), name_of(a.data), report,
                   std::numeric_limits<double>::quiet_NaN(), r.config().seed);
  }
  return kOk;
}

struct SweepArgs {
  std::string axis;
  std::vector<std::string> data;
  std::string out;
  std::vector<std::string> values;
  std::optional<std::size_t> repeats;
  ModelOverrides overrides;
};

int cmd_sweep(const GlobalOptions& g, const SweepArgs& a, std::ostream& out, std::ostream& err) {
  Context ctx = make_context(g);
  a.overrides.apply(ctx.config);
  SweepSpec spec;
  spec.axis = parse_sweep_axis(a.axis);
  spec.values = a.values.empty() ? ctx.config.sweep_values_for(spec.axis) : a.values;
  spec.base_config = ctx.config.reservoir;
  spec.base_method = ctx.config.readout;
  spec.repeats = a.repeats.value_or(ctx.config.sweep_repeats);
  spec.master_seed = ctx.master_seed;
  spec.fit = ctx.fit_options();
  for (const auto& path : a.data) {
    const SequenceDataset ds = load_checked(path);
    DatasetSplit split = split_dataset(ds, ctx.config.train_fraction, derive_seed(ctx.master_seed, "split"));
    spec.datasets.push_back(SweepDataset{name_of(path), std::move(split.train), std::move(split.test)});
  }
  const auto rows = run_sweep(spec);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  write_text_atomic(a.out, csv.str());
  for (const auto& row : rows) {
    if (!row.error.empty()) {
      err << "cell " << row.value << "/" << row.dataset << "/" << row.repeat << " failed: " << row.error << '\n';
    }
  }
  out << "wrote " << a.out << " (" << rows.size() << " rows)\n";
  out << "value,dataset,mean_mape_percent,std_mape_percent,mean_train_seconds,errors\n";
  for (const auto& s : summarize(rows)) {
    out << s.value << ',' << s.dataset << ',' << format_double(s.mean_mape) << ',' << format_double(s.std_mape)
        << ',' << format_double(s.mean_train_seconds) << ',' << s.errors << '\n';
  }
  return kOk;
}

struct TransferArgs {
  std::string source;
  std::string target;
  std::optional<std::string> target_test;
  std::string mode = "both";
  double alpha = 0.0;
  std::size_t repeats = 1;
  std::string out;
  ModelOverrides overrides;
};

int cmd_transfer(const GlobalOptions& g, const TransferArgs& a, std::ostream& out) {
  if (!(a.alpha >= 0.0 && a.alpha <= 1.0)) {
    throw ConfigError("--alpha must lie in [0, 1], got " + format_double(a.alpha));
  }
  if (a.mode != "direct" && a.mode != "finetune" && a.mode != "both") {
    throw ConfigError("--mode must be direct, finetune or both, got '" + a.mode + "'");
  }
  if (a.repeats < 1) throw ConfigError("--repeats must be >= 1");
  Context ctx = make_context(g);
  a.overrides.apply(ctx.config);
  const SequenceDataset source = load_checked(a.source);
  SequenceDataset target_train;
  SequenceDataset target_test;
  if (a.target_test) {
    target_train = load_checked(a.target);
    target_test = load_checked(*a.target_test);
  } else {
    DatasetSplit split =
        split_dataset(load_checked(a.target), ctx.config.train_fraction, derive_seed(ctx.master_seed, "split"));
    target_train = std::move(split.train);
    target_test = std::move(split.test);
  }

  std::vector<TransferRow> rows;
  for (std::size_t rep = 0; rep < a.repeats; ++rep) {
    ReservoirConfig rc = ctx.config.reservoir;
    rc.seed = derive_seed(ctx.master_seed, rep);
    const Reservoir reservoir = build(rc);
    std::vector<TransferMode> modes;
    if (a.mode != "finetune") modes.emplace_back(DirectTransfer{});
    if (a.mode != "direct") modes.emplace_back(FineTune{a.alpha});
    for (const auto& mode : modes) {
      TransferPlan plan{name_of(a.source), name_of(a.target), &source, &target_train, &target_test, mode};
      rows.push_back(run_transfer(reservoir, plan, ctx.config.readout, ctx.fit_options()));
    }
  }
  std::ostringstream csv;
  write_transfer_csv(csv, rows);
  write_text_atomic(a.out, csv.str());
  out << "wrote " << a.out << '\n' << csv.str();
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Config: return kConfig;
    case ErrorCategory::Data: return kData;
    case ErrorCategory::Numeric: return kNumeric;
  }
  return kInternal;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"echochan: echo state network channel modelling toolkit"};
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 success, 1 internal error, 2 config/usage error, 3 data/file error, "
      "4 numeric error (shape mismatch, solver failure).\n"
      "Config: --config <path>, else $ECHOCHAN_CONFIG, else built-in defaults.");

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON config file (see docs/CONFIG.md)");
  app.add_option("--seed", g.seed, "Master seed (overrides the config's seed)");
  app.add_option("--threads", g.threads, "Worker threads (0 = available cores)");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic transmitted/received I/Q dataset");
  generate->add_option("--preset", gen.preset, "Channel preset name from the config")->required();
  generate->add_option("-n,--num-sequences", gen.count, "Number of sequences")->capture_default_str();
  generate->add_option("-o,--out", gen.out, "Output dataset file (.esd)")->required();
  generate->add_option("--csv-dir", gen.csv_dir, "Also export one CSV per sequence into this directory");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit an ESN on a dataset and report held-out MAPE");
  train_cmd->add_option("-d,--data", train.data, "Training dataset file")->required();
  train_cmd->add_option("-o,--out", train.out, "Output model file (.esn)")->required();
  train_cmd->add_option("--csv", train.csv, "Write the held-out report as CSV");
  train.overrides.attach(train_cmd);

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluate a saved model on a dataset");
  evaluate_cmd->add_option("-m,--model", ev.model, "Model file")->required();
  evaluate_cmd->add_option("-d,--data", ev.data, "Dataset file")->required();
  evaluate_cmd->add_option("--csv", ev.csv, "Write the report as CSV");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one hyper-parameter across datasets");
  sweep_cmd->add_option("--axis", sw.axis, "init, radius, size, activation or regression")->required();
  sweep_cmd->add_option("-d,--data", sw.data, "Dataset files (each split 80/20)")->required();
  sweep_cmd->add_option("-o,--out", sw.out, "Output CSV")->required();
  sweep_cmd->add_option("--values", sw.values, "Axis values (default: built-in list for the axis)");
  sweep_cmd->add_option("--repeats", sw.repeats, "Repeats per cell (default from config)");
  sw.overrides.attach(sweep_cmd);

  TransferArgs tr;
  auto* transfer_cmd = app.add_subcommand("transfer", "Pretrain on a source domain, then transfer to a target");
  transfer_cmd->add_option("--source", tr.source, "Source-domain dataset")->required();
  transfer_cmd->add_option("--target", tr.target, "Target training dataset (split 80/20 if --target-test is absent)")
      ->required();
  transfer_cmd->add_option("--target-test", tr.target_test, "Target test dataset");
  transfer_cmd->add_option("--mode", tr.mode, "direct, finetune or both")->capture_default_str();
  transfer_cmd->add_option("--alpha", tr.alpha, "Fine-tune blend weight of the source accumulators")
      ->capture_default_str();
  transfer_cmd->add_option("--repeats", tr.repeats, "Independent reservoirs")->capture_default_str();
  transfer_cmd->add_option("-o,--out", tr.out, "Output CSV")->required();
  tr.overrides.attach(transfer_cmd);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*generate) return cmd_generate(g, gen, out);
    if (*train_cmd) return cmd_train(g, train, out);
    if (*evaluate_cmd) return cmd_evaluate(g, ev, out);
    if (*sweep_cmd) return cmd_sweep(g, sw, out, err);
    if (*transfer_cmd) return cmd_transfer(g, tr, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}

}  // namespace echochan::cli

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "echochan/channelsim.hpp"
#include "echochan/config.hpp"
#include "echochan/error.hpp"
#include "echochan/eval.hpp"
#include "echochan/numerics.hpp"
#include "echochan/readout.hpp"
#include "echochan/reservoir.hpp"
#include "echochan/rng.hpp"
#include "echochan/store.hpp"
#include "echochan/transfer.hpp"

using namespace echochan;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / double(v.size() - 1));
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

const RunConfig& config() {
  static const RunConfig cfg = default_run_config();
  return cfg;
}

SequenceDataset preset(const std::string& name, std::size_t n, std::uint64_t seed) {
  WaveformSpec wave = config().waveform;
  wave.seed = seed;
  return generate_dataset(wave, config().channel(name), n, name);
}

// Reduced-scale reservoir for the multi-fit experiments (criteria 5-7).
ReservoirConfig sweep_reservoir() {
  ReservoirConfig c = config().reservoir;
  c.reservoir_size = 200;
  return c;
}

// 1. Raw initializer radii per reservoir size.
Outcome table_vi() {
  struct Band {
    InitMethod method;
    double lo;
    double hi;
  };
  const Band bands[] = {{InitMethod::Xavier, 0.50, 0.70},
                        {InitMethod::NormalizedXavier, 0.92, 1.20},
                        {InitMethod::He, 1.33, 1.55}};
  bool ok = true;
  std::ostringstream detail;
  for (const Band& b : bands) {
    detail << "\n    " << to_string(b.method) << ":";
    for (const std::size_t n : {50, 100, 150, 300, 578, 600, 1200}) {
      std::vector<double> radii;
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        radii.push_back(spectral_radius(init_matrix(b.method, n, n, 1.0, derive_seed(seed, "w"))));
      }
      const double m = mean(radii);
      const bool in = m >= b.lo && m <= b.hi;
      ok = ok && in;
      detail << fmt(" N=%zu:%.3f%s", n, m, in ? "" : "(out)");
    }
    detail << fmt("  band [%.2f, %.2f]", b.lo, b.hi);
  }
  return {ok, detail.str()};
}

// 2. Two initial states, same input, N = 578.
Outcome fading_memory() {
  ReservoirConfig cfg = config().reservoir;
  cfg.seed = 578;
  const Reservoir r = build(cfg);
  const std::size_t steps = 500;
  const Matrix u = random_matrix(2, steps, 1);
  Rng rng(2);
  Vector x0(cfg.reservoir_size);
  for (std::size_t i = 0; i < x0.size(); ++i) x0[i] = rng.uniform(-1.0, 1.0);
  const Matrix a = harvest(r, u).states;
  const Matrix b = harvest_from(r, x0, u).states;
  std::size_t first_below = steps + 1;
  double final_diff = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    double d = 0.0;
    for (std::size_t i = 0; i < cfg.reservoir_size; ++i) d = std::max(d, std::abs(a(i, t) - b(i, t)));
    if (d < 1e-6 && first_below > steps) first_below = t + 1;
    if (d >= 1e-6) first_below = steps + 1;
    final_diff = d;
  }
  return {first_below <= steps,
          fmt("||x1-x2||_inf < 1e-6 from step %zu on; at step %zu: %.3g", first_below, steps, final_diff)};
}

// 3. Ridge vs gradient descent, and batched vs whole fits.
Outcome closed_form() {
  double worst_gd = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Matrix x = random_matrix(20, 200, 10 + seed);
    const Matrix y = random_matrix(2, 200, 20 + seed);
    const double lambda = 0.1;
    Accumulators acc = accumulate(Accumulators::zeros(2, 20), StateTrajectory{x, 0}, y);
    const Matrix w = solve(acc, Ridge{lambda}).w_out;

    // Gradient descent with an independently computed Gram matrix.
    Matrix xxt(20, 20);
    Matrix yxt(2, 20);
    for (std::size_t t = 0; t < 200; ++t) {
      for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t j = 0; j < 20; ++j) xxt(i, j) += x(i, t) * x(j, t);
        for (std::size_t o = 0; o < 2; ++o) yxt(o, i) += y(o, t) * x(i, t);
      }
    }
    double trace = 0.0;
    for (std::size_t i = 0; i < 20; ++i) trace += xxt(i, i);
    const double step = 1.0 / (2.0 * (trace + lambda));
    Matrix g(2, 20);
    for (int it = 0; it < 2'000'000; ++it) {
      Matrix grad(2, 20);
      for (std::size_t o = 0; o < 2; ++o)
        for (std::size_t j = 0; j < 20; ++j) {
          double s = -yxt(o, j) + lambda * g(o, j);
          for (std::size_t k = 0; k < 20; ++k) s += g(o, k) * xxt(k, j);
          grad(o, j) = 2.0 * s;
        }
      if (grad.max_abs() < 1e-10) break;
      grad *= step;
      g -= grad;
    }
    worst_gd = std::max(worst_gd, max_abs_diff(w, g));
  }

  const SequenceDataset ds = preset("data2", 24, 3);
  ReservoirConfig rc = config().reservoir;
  rc.reservoir_size = 100;
  const Reservoir r = build(rc);
  const Matrix whole = fit(r, ds, Ridge{}, FitOptions{ds.num_sequences(), 1}).w_out;
  double worst_batch = 0.0;
  for (const std::size_t batch : {1, 5, 7}) {
    worst_batch = std::max(worst_batch, max_abs_diff(fit(r, ds, Ridge{}, FitOptions{batch, 0}).w_out, whole));
  }
  return {worst_gd < 1e-6 && worst_batch < 1e-10,
          fmt("ridge vs gradient descent max diff %.3g (< 1e-6); batched vs whole fit max diff %.3g (< 1e-10)",
              worst_gd, worst_batch)};
}

// 4. Reference ESN on data1 vs zero and identity predictors.
Outcome learnability() {
  const SequenceDataset ds = preset("data1", 1000, config().seed);
  const DatasetSplit split = split_dataset(ds, config().train_fraction, derive_seed(config().seed, "split"));
  ReservoirConfig rc = config().reservoir;
  rc.seed = derive_seed(config().seed, "reservoir");
  const Reservoir r = build(rc);
  const auto start = std::chrono::steady_clock::now();
  const ReadoutModel model = fit(r, split.train, config().readout);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double esn = evaluate(r, model, split.test).mape_percent;
  const double zero = zero_predictor_report(split.test).mape_percent;
  const double ident = identity_predictor_report(split.test).mape_percent;
  return {esn <= 0.5 * zero && esn <= 0.7 * ident,
          fmt("N=578 ESN MAPE %.3f%% (train %.1fs, %zu/%zu seqs); zero predictor %.1f%% (bound %.1f%%); "
              "identity %.1f%% (bound %.1f%%)",
              esn, secs, split.train.num_sequences(), split.test.num_sequences(), zero, 0.5 * zero, ident,
              0.7 * ident)};
}

std::vector<SweepSummary> sweep(SweepAxis axis, std::vector<std::string> values, const std::string& preset_name,
                                std::uint64_t seed) {
  const SequenceDataset ds = preset(preset_name, 250, seed);
  DatasetSplit split = split_dataset(ds, 0.8, derive_seed(seed, "split"));
  SweepSpec spec;
  spec.axis = axis;
  spec.values = std::move(values);
  spec.base_config = sweep_reservoir();
  spec.base_method = config().readout;
  spec.datasets = {SweepDataset{preset_name, std::move(split.train), std::move(split.test)}};
  spec.repeats = 3;
  spec.master_seed = seed;
  return summarize(run_sweep(spec));
}

// 5. Flat MAPE across spectral radii on data3.
Outcome radius_robustness() {
  const auto rows = sweep(SweepAxis::SpectralRadius, default_sweep_values(SweepAxis::SpectralRadius), "data3",
                          config().seed);
  double lo = INFINITY;
  double hi = 0.0;
  std::size_t errors = 0;
  std::ostringstream detail;
  for (const auto& s : rows) {
    lo = std::min(lo, s.mean_mape);
    hi = std::max(hi, s.mean_mape);
    errors += s.errors;
    detail << fmt(" rho=%s:%.2f", s.value.c_str(), s.mean_mape);
  }
  const double ratio = hi / lo;
  return {errors == 0 && ratio <= 1.5,
          fmt("max/min mean MAPE %.3f (<= 1.5), N=200, 3 repeats;", ratio) + detail.str()};
}

// 6. Larger reservoirs do better on data1.
Outcome size_trend() {
  const auto rows = sweep(SweepAxis::ReservoirSize, {"50", "100", "150", "300"}, "data1", config().seed);
  std::ostringstream detail;
  double m50 = NAN;
  double m300 = NAN;
  bool monotone = true;
  double prev = INFINITY;
  for (const auto& s : rows) {
    detail << fmt(" N=%s:%.2f+-%.2f", s.value.c_str(), s.mean_mape, s.std_mape);
    if (s.value == "50") m50 = s.mean_mape;
    if (s.value == "300") m300 = s.mean_mape;
    monotone = monotone && s.mean_mape < prev;
    prev = s.mean_mape;
  }
  return {m300 < m50, fmt("mean MAPE N=300 %.2f < N=50 %.2f (3 repeats; monotone over 50..300: %s);", m300, m50,
                          monotone ? "yes" : "no") +
                          detail.str()};
}

// 7. Fine-tuning beats direct transfer from bellhop_like to data3.
Outcome transfer_trend() {
  const SequenceDataset source = preset("bellhop_like", 200, config().seed);
  const SequenceDataset target = preset("data3", 150, derive_seed(config().seed, "target"));
  const SequenceDataset target_train = target.slice(0, 100);
  const SequenceDataset target_test = target.slice(100, 50);
  std::vector<double> direct;
  std::vector<double> tuned;
  bool each = true;
  for (std::uint64_t rep = 0; rep < 3; ++rep) {
    ReservoirConfig rc = sweep_reservoir();
    rc.seed = derive_seed(config().seed, rep);
    const Reservoir r = build(rc);
    const PretrainResult pre = pretrain(r, source, config().readout);
    direct.push_back(direct_transfer_eval(r, pre.model, target_test).mape_percent);
    tuned.push_back(evaluate(r, fine_tune(r, pre.source_acc, target_train, 0.0, config().readout), target_test)
                        .mape_percent);
    each = each && tuned.back() <= direct.back();
  }
  const bool means = mean(tuned) <= mean(direct);
  return {each || means,
          fmt("direct %.2f+-%.2f, fine-tune(alpha=0) %.2f+-%.2f MAPE over 3 repeats (100 target train seqs, N=200); "
              "every repeat: %s",
              mean(direct), sample_std(direct), mean(tuned), sample_std(tuned), each ? "yes" : "no")};
}

// 8. MAPE worked examples.
Outcome mape_examples() {
  const MetricReport a = mape(Matrix{{100, 200}}, Matrix{{110, 180}}, 1e-9);
  const MetricReport b = mape(Matrix{{1.5, -2.0, 3.0}}, Matrix{{1.5, -2.0, 3.0}}, 1e-9);
  const MetricReport c = mape(Matrix{{0, 1}}, Matrix{{5, 1}}, 1e-9);
  const bool ok = a.mape_percent == 10.0 && b.mape_percent == 0.0 && c.mape_percent == 0.0 &&
                  c.samples_excluded == 1 && c.samples_used == 1;
  return {ok, fmt("%.17g%% / %.17g%% / %.17g%% with %zu excluded", a.mape_percent, b.mape_percent, c.mape_percent,
                  c.samples_excluded)};
}

// 9. generate -> train -> evaluate twice through the CLI.
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "echochan_acceptance";
  fs::remove_all(root);
  std::vector<std::string> outputs;
  std::vector<std::vector<std::uint8_t>> datasets;
  std::vector<std::vector<std::uint8_t>> models;
  bool commands_ok = true;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / std::to_string(run);
    fs::create_directories(dir);
    const std::string data = (dir / "data1.esd").string();
    const std::string model = (dir / "model.esn").string();
    std::ostringstream out;
    std::ostringstream err;
    auto cli = [&](std::vector<std::string> args) {
      args.insert(args.begin(), {"echochan", "--seed", "4242"});
      commands_ok = commands_ok && cli::run(args, out, err) == 0;
    };
    cli({"generate", "--preset", "data1", "-n", "40", "-o", data});
    cli({"train", "-d", data, "-o", model});
    std::ostringstream eval_out;
    commands_ok = commands_ok &&
                  cli::run({"echochan", "--seed", "4242", "evaluate", "-m", model, "-d", data}, eval_out, err) == 0;
    outputs.push_back(eval_out.str());
    datasets.push_back(read_file(data));
    models.push_back(read_file(model));
  }
  const ModelArtifact m = decode_model(models[0]);
  const bool model_rt = encode_model(m) == models[0];
  const SequenceDataset d = decode_dataset(datasets[0]);
  const bool data_rt = encode_dataset(d) == datasets[0];
  fs::remove_all(root);
  const bool ok = commands_ok && datasets[0] == datasets[1] && models[0] == models[1] && outputs[0] == outputs[1] &&
                  model_rt && data_rt;
  std::string report = outputs[0];
  if (!report.empty() && report.back() == '\n') report.pop_back();
  return {ok, fmt("dataset files identical: %s, model files identical: %s, evaluate output identical: %s, "
                  "round trips exact: %s; ",
                  datasets[0] == datasets[1] ? "yes" : "no", models[0] == models[1] ? "yes" : "no",
                  outputs[0] == outputs[1] ? "yes" : "no", model_rt && data_rt ? "yes" : "no") +
                  report};
}

// 10. Raised-cosine analytic values.
Outcome raised_cosine_checks() {
  const auto taps = raised_cosine_taps(0.35, 8, 4);
  const double center = taps[taps.size() / 2];
  double worst_zero = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    if (i != taps.size() / 2 && i % 4 == 0) worst_zero = std::max(worst_zero, std::abs(taps[i]));
  }
  const double limit = raised_cosine(1.0, 0.5);
  return {center == 1.0 && worst_zero < 1e-12 && std::abs(limit - 0.5) < 1e-12,
          fmt("h(0)=%.17g, max |h(kTs)| = %.3g, h(Ts/2; beta=1) = %.17g", center, worst_zero, limit)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"raw initializer spectral radii", table_vi},
      {"fading memory", fading_memory},
      {"closed-form readout", closed_form},
      {"end-to-end learnability", learnability},
      {"spectral-radius robustness", radius_robustness},
      {"reservoir size trend", size_trend},
      {"transfer trend", transfer_trend},
      {"MAPE worked examples", mape_examples},
      {"determinism and formats", determinism},
      {"raised-cosine analytics", raised_cosine_checks},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %zu (%s) [%.1fs]: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

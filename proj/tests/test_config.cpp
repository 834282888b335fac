#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "echochan/config.hpp"
#include "echochan/error.hpp"
#include "support.hpp"

using namespace echochan;
using echochan::test::TempDir;

TEST_SUITE("config") {

TEST_CASE("shipped config file is the built-in default") {
  std::ifstream in(std::string(ECHOCHAN_SOURCE_DIR) + "/config/default.json");
  REQUIRE(in);
  std::stringstream text;
  text << in.rdbuf();
  CHECK(text.str() == default_config_text());
}

TEST_CASE("defaults mirror the reference ESN") {
  const RunConfig cfg = default_run_config();
  CHECK(cfg.reservoir.reservoir_size == 578);
  CHECK(cfg.reservoir.target_spectral_radius == 0.5);
  CHECK(cfg.reservoir.init == InitMethod::Xavier);
  CHECK(cfg.reservoir.activation == Activation::Tanh);
  CHECK(cfg.reservoir.sparsity == 1.0);
  CHECK_FALSE(cfg.reservoir.use_feedback);
  CHECK(std::get<Ridge>(cfg.readout).lambda == 1e-6);
  CHECK(cfg.train_fraction == 0.8);
  CHECK(cfg.waveform.sequence_length == 578);
  for (const char* name : {"awgn", "data1", "data2", "data3", "data4", "bellhop_like", "identity"}) {
    CAPTURE(name);
    CHECK_NOTHROW(validate(cfg.channel(name)));
  }
  const auto& d4 = std::get<MultipathChannel>(cfg.channel("data4"));
  const auto& d2 = std::get<MultipathChannel>(cfg.channel("data2"));
  CHECK(d4.disturbance > std::get<MultipathChannel>(cfg.channel("data3")).disturbance);
  CHECK(d4.snr_db < d2.snr_db);
  CHECK(std::get<MultipathChannel>(cfg.channel("bellhop_like")).taps.size() == 8);
  CHECK(std::get<MultipathChannel>(cfg.channel("identity")).snr_db == kNoNoise);
}

TEST_CASE("unknown preset lists the available ones") {
  try {
    (void)default_run_config().channel("data9");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("data9") != std::string::npos);
    CHECK(what.find("bellhop_like") != std::string::npos);
  }
}

TEST_CASE("partial documents overlay the base") {
  const RunConfig cfg =
      parse_run_config(R"({"reservoir": {"size": 64, "init": "he"}, "seed": 9})", default_run_config());
  CHECK(cfg.reservoir.reservoir_size == 64);
  CHECK(cfg.reservoir.init == InitMethod::He);
  CHECK(cfg.reservoir.target_spectral_radius == 0.5);
  CHECK(cfg.seed == 9);
  CHECK(cfg.channels.contains("data1"));

  const RunConfig lasso = parse_run_config(R"({"readout": {"method": "lasso", "lambda": 0.01}})");
  CHECK(lasso.channels.empty());
  CHECK(std::get<Lasso>(lasso.readout).lambda == 0.01);

  const RunConfig sweep = parse_run_config(R"({"sweep": {"repeats": 2, "values": {"radius": ["0.2", "0.4"]}}})");
  CHECK(sweep.sweep_repeats == 2);
  CHECK(sweep.sweep_values_for(SweepAxis::SpectralRadius) == std::vector<std::string>{"0.2", "0.4"});
  CHECK(sweep.sweep_values_for(SweepAxis::ReservoirSize) == default_sweep_values(SweepAxis::ReservoirSize));
}

TEST_CASE("strict parsing") {
  CHECK_THROWS_AS(parse_run_config(R"({"sed": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"reservoir": {"spectral_raduis": 0.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"reservoir": {"size": -5}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"reservoir": {"size": "big"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"reservoir": {"spectral_radius": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"reservoir": {"init": "lecun"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"readout": {"method": "svm"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"channels": {"x": {"type": "rayleigh"}}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"channels": {"x": {"type": "awgn", "taps": []}}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"channels": {"x": {"type": "multipath", "taps": [{"delay": 0, "gain": 1}]}}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"sweep": {"values": {"depth": ["1"]}}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"train_fraction": 1.0}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[1, 2]"), ConfigError);
}

TEST_CASE("config path precedence") {
  const TempDir dir("config_path");
  const auto file = dir / "c.json";
  std::ofstream(file) << R"({"seed": 123})";
  CHECK(load_run_config(file).seed == 123);
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), ConfigError);

  ::setenv("ECHOCHAN_CONFIG", file.c_str(), 1);
  CHECK(load_run_config(std::nullopt).seed == 123);
  ::unsetenv("ECHOCHAN_CONFIG");
  CHECK(load_run_config(std::nullopt).seed == default_run_config().seed);
}

}  // TEST_SUITE

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "echochan/dataset.hpp"
#include "echochan/eval.hpp"
#include "echochan/readout.hpp"
#include "echochan/reservoir.hpp"

namespace echochan {

/// Everything a CLI run needs. Schema: docs/CONFIG.md.
struct RunConfig {
  std::uint64_t seed = 0;
  WaveformSpec waveform;
  std::map<std::string, ChannelSpec> channels;
  ReservoirConfig reservoir;  // input_dim/output_dim fixed to 2 (I/Q)
  RegressionMethod readout = Ridge{};
  double train_fraction = 0.8;
  std::size_t batch_size = 32;
  std::size_t sweep_repeats = 5;
  /// Per-axis overrides of default_sweep_values().
  std::map<std::string, std::vector<std::string>> sweep_values;

  const ChannelSpec& channel(const std::string& preset) const;
  std::vector<std::string> preset_names() const;
  std::vector<std::string> sweep_values_for(SweepAxis axis) const;
};

/// Built-in defaults (the shipped config/default.json, compiled in).
RunConfig default_run_config();
const char* default_config_text();

/// Parses `json_text` on top of `base`: keys present override, channels merge
/// by name. Unknown keys and wrong types throw ConfigError naming the key path.
RunConfig parse_run_config(const std::string& json_text, const RunConfig& base);
RunConfig parse_run_config(const std::string& json_text);

/// Reads `path` if given, else $ECHOCHAN_CONFIG if set, else the defaults.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path);

}  // namespace echochan

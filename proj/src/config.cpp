#include "echochan/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <concepts>

#include "default_config.hpp"
#include "echochan/error.hpp"
#include "json.hpp"

namespace echochan {

namespace {

using nlohmann::json;

// Walks one JSON object, rejecting any key that is not read.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  // Throws on the first key that was never read.
  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.contains(key)) throw ConfigError("unknown config key '" + join(key) + "'");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key);
  }

  const json& at(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }

  void read(const std::string& key, double& out) {
    if (!has(key)) return;
    out = as_double(at(key), join(key));
  }

  template <std::unsigned_integral U>
  void read(const std::string& key, U& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_unsigned()) throw ConfigError(join(key) + ": expected a non-negative integer");
    out = v.get<U>();
  }

  void read(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(join(key) + ": expected true or false");
    out = v.get<bool>();
  }

  void read(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(join(key) + ": expected a string");
    out = v.get<std::string>();
  }

  static double as_double(const json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string() && v.get<std::string>() == "inf") return kNoNoise;
    throw ConfigError(path + ": expected a number");
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
auto rethrow_as_config(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

ChannelSpec parse_channel(const json& node, const std::string& path) {
  Section s(node, path);
  std::string type;
  s.read("type", type);
  if (type == "awgn") {
    AwgnChannel c;
    s.read("snr_db", c.snr_db);
    s.finish();
    return c;
  }
  if (type == "multipath") {
    MultipathChannel c;
    c.taps.clear();
    if (s.has("taps")) {
      const json& taps = s.at("taps");
      if (!taps.is_array()) throw ConfigError(s.join("taps") + ": expected an array");
      for (std::size_t i = 0; i < taps.size(); ++i) {
        Section t(taps[i], s.join("taps") + "[" + std::to_string(i) + "]");
        Tap tap;
        t.read("delay", tap.delay);
        t.read("gain_i", tap.gain_i);
        t.read("gain_q", tap.gain_q);
        t.finish();
        c.taps.push_back(tap);
      }
    }
    s.read("disturbance", c.disturbance);
    s.read("disturbance_period", c.disturbance_period);
    s.read("snr_db", c.snr_db);
    s.finish();
    ChannelSpec spec = c;
    rethrow_as_config(path, [&] { validate(spec); return 0; });
    return spec;
  }
  throw ConfigError(s.join("type") + ": expected \"awgn\" or \"multipath\", got \"" + type + "\"");
}

void apply_readout(Section& s, RegressionMethod& method) {
  std::string name;
  switch (method.index()) {
    case 0: name = "ridge"; break;
    case 1: name = "linear"; break;
    default: name = "lasso"; break;
  }
  double lambda = 1e-6;
  std::size_t max_iter = 10'000;
  double tol = 1e-8;
  if (const auto* r = std::get_if<Ridge>(&method)) lambda = r->lambda;
  if (const auto* l = std::get_if<Lasso>(&method)) {
    lambda = l->lambda;
    max_iter = l->max_iter;
    tol = l->tol;
  }
  s.read("method", name);
  s.read("lambda", lambda);
  s.read("max_iter", max_iter);
  s.read("tol", tol);
  s.finish();
  if (name == "ridge") {
    method = Ridge{lambda};
  } else if (name == "linear") {
    method = Linear{};
  } else if (name == "lasso") {
    method = Lasso{lambda, max_iter, tol};
  } else {
    throw ConfigError(s.join("method") + ": expected ridge, linear or lasso, got \"" + name + "\"");
  }
  rethrow_as_config(s.where(), [&] { validate(method); return 0; });
}

}  // namespace

const ChannelSpec& RunConfig::channel(const std::string& preset) const {
  const auto it = channels.find(preset);
  if (it == channels.end()) {
    std::string names;
    for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("unknown channel preset '" + preset + "' (available: " + names + ")");
  }
  return it->second;
}

std::vector<std::string> RunConfig::preset_names() const {
  std::vector<std::string> out;
  for (const auto& [name, spec] : channels) out.push_back(name);
  return out;
}

std::vector<std::string> RunConfig::sweep_values_for(SweepAxis axis) const {
  const auto it = sweep_values.find(std::string(to_string(axis)));
  return it != sweep_values.end() ? it->second : default_sweep_values(axis);
}

const char* default_config_text() { return detail::kDefaultConfigJson; }

RunConfig parse_run_config(const std::string& json_text, const RunConfig& base) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg = base;
  Section top(root, "");
  top.read("seed", cfg.seed);

  if (top.has("waveform")) {
    Section s(top.at("waveform"), "waveform");
    s.read("samples_per_symbol", cfg.waveform.samples_per_symbol);
    s.read("rolloff", cfg.waveform.rolloff);
    s.read("filter_span", cfg.waveform.filter_span);
    s.read("sequence_length", cfg.waveform.sequence_length);
    s.finish();
    rethrow_as_config("waveform", [&] { cfg.waveform.validate(); return 0; });
  }

  if (top.has("channels")) {
    const json& node = top.at("channels");
    if (!node.is_object()) throw ConfigError("channels: expected an object");
    for (const auto& [name, spec] : node.items()) {
      if (name.empty() || name.size() > 31) {
        throw ConfigError("channels: preset names must be 1-31 characters, got '" + name + "'");
      }
      cfg.channels[name] = parse_channel(spec, "channels." + name);
    }
  }

  if (top.has("reservoir")) {
    Section s(top.at("reservoir"), "reservoir");
    ReservoirConfig& r = cfg.reservoir;
    s.read("size", r.reservoir_size);
    std::string init(to_string(r.init));
    s.read("init", init);
    r.init = rethrow_as_config("reservoir.init", [&] { return parse_init_method(init); });
    s.read("sparsity", r.sparsity);
    s.read("spectral_radius", r.target_spectral_radius);
    std::string act(to_string(r.activation));
    s.read("activation", act);
    r.activation = rethrow_as_config("reservoir.activation", [&] { return parse_activation(act); });
    s.read("use_feedback", r.use_feedback);
    s.read("washout", r.washout);
    s.read("allow_unstable", r.allow_unstable);
    s.finish();
  }
  cfg.reservoir.input_dim = 2;
  cfg.reservoir.output_dim = 2;
  rethrow_as_config("reservoir", [&] { cfg.reservoir.validate(); return 0; });

  if (top.has("readout")) {
    Section s(top.at("readout"), "readout");
    apply_readout(s, cfg.readout);
  }

  if (top.has("train")) {
    Section s(top.at("train"), "train");
    s.read("train_fraction", cfg.train_fraction);
    s.read("batch_size", cfg.batch_size);
    s.finish();
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
      throw ConfigError("train.train_fraction must lie in (0, 1)");
    }
    if (cfg.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  }

  if (top.has("sweep")) {
    Section s(top.at("sweep"), "sweep");
    s.read("repeats", cfg.sweep_repeats);
    if (cfg.sweep_repeats < 1) throw ConfigError("sweep.repeats must be >= 1");
    if (s.has("values")) {
      const json& values = s.at("values");
      if (!values.is_object()) throw ConfigError("sweep.values: expected an object");
      for (const auto& [axis_name, list] : values.items()) {
        const SweepAxis axis =
            rethrow_as_config("sweep.values", [&] { return parse_sweep_axis(axis_name); });
        if (!list.is_array() || list.empty()) {
          throw ConfigError("sweep.values." + axis_name + ": expected a non-empty array");
        }
        std::vector<std::string> out;
        for (const auto& v : list) {
          if (v.is_string()) {
            out.push_back(v.get<std::string>());
          } else if (v.is_number()) {
            out.push_back(v.is_number_integer() ? v.dump() : format_double(v.get<double>()));
          } else {
            throw ConfigError("sweep.values." + axis_name + ": entries must be strings or numbers");
          }
        }
        cfg.sweep_values[std::string(to_string(axis))] = std::move(out);
      }
    }
    s.finish();
  }
  top.finish();
  return cfg;
}

RunConfig parse_run_config(const std::string& json_text) {
  RunConfig empty;
  empty.channels.clear();
  return parse_run_config(json_text, empty);
}

RunConfig default_run_config() { return parse_run_config(default_config_text()); }

RunConfig load_run_config(const std::optional<std::filesystem::path>& path) {
  std::optional<std::filesystem::path> chosen = path;
  if (!chosen) {
    if (const char* env = std::getenv("ECHOCHAN_CONFIG"); env != nullptr && *env != '\0') {
      chosen = std::filesystem::path(env);
    }
  }
  RunConfig defaults = default_run_config();
  if (!chosen) return defaults;
  std::ifstream in(*chosen);
  if (!in) throw ConfigError("cannot read config file '" + chosen->string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), defaults);
}

}  // namespace echochan

#include "denoise/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "denoise/errors.hpp"

namespace denoise {

using nlohmann::json;

namespace {

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  fail(ErrorCode::InvalidConfig, "config key '" + key + "': " + why);
}

double as_real(const std::string& key, const json& v) {
  if (!v.is_number()) bad_key(key, "expected a number");
  return v.get<double>();
}

std::uint64_t as_uint(const std::string& key, const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  bad_key(key, "expected a non-negative integer");
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) bad_key(key, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) bad_key(key, "expected a string");
  return v.get<std::string>();
}

struct KeySpec {
  std::function<void(ExperimentConfig&, const std::string&, const json&)> set;
  std::function<json(const ExperimentConfig&)> get;
};

template <typename T>
KeySpec uint_key(T ExperimentConfig::*field) {
  return {[field](ExperimentConfig& c, const std::string& k, const json& v) { c.*field = static_cast<T>(as_uint(k, v)); },
          [field](const ExperimentConfig& c) { return json(c.*field); }};
}

KeySpec real_key(double ExperimentConfig::*field) {
  return {[field](ExperimentConfig& c, const std::string& k, const json& v) { c.*field = as_real(k, v); },
          [field](const ExperimentConfig& c) { return json(c.*field); }};
}

template <typename Sub, typename T>
KeySpec nested_uint(Sub ExperimentConfig::*sub, T Sub::*field) {
  return {[=](ExperimentConfig& c, const std::string& k, const json& v) { (c.*sub).*field = static_cast<T>(as_uint(k, v)); },
          [=](const ExperimentConfig& c) { return json((c.*sub).*field); }};
}

template <typename Sub>
KeySpec nested_real(Sub ExperimentConfig::*sub, double Sub::*field) {
  return {[=](ExperimentConfig& c, const std::string& k, const json& v) { (c.*sub).*field = as_real(k, v); },
          [=](const ExperimentConfig& c) { return json((c.*sub).*field); }};
}

const std::vector<std::pair<std::string, KeySpec>>& key_table() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, KeySpec>> table = {
      {"dataset",
       {[](C& c, const std::string& k, const json& v) { c.dataset = as_string(k, v); },
        [](const C& c) { return json(c.dataset); }}},
      {"synth_n_graphs", nested_uint(&C::synth, &SynthConfig::n_graphs)},
      {"synth_nodes_lo", nested_uint(&C::synth, &SynthConfig::nodes_lo)},
      {"synth_nodes_hi", nested_uint(&C::synth, &SynthConfig::nodes_hi)},
      {"synth_p_normal", nested_real(&C::synth, &SynthConfig::p_normal)},
      {"synth_p_anom", nested_real(&C::synth, &SynthConfig::p_anom)},
      {"synth_attr_shift", nested_real(&C::synth, &SynthConfig::attr_shift)},
      {"synth_anom_frac", nested_real(&C::synth, &SynthConfig::anom_frac)},
      {"synth_attr_dim", nested_uint(&C::synth, &SynthConfig::attr_dim)},
      {"synth_seed", uint_key(&C::synth_seed)},
      {"anomaly_class",
       {[](C& c, const std::string& k, const json& v) {
          if (v.is_string() && v.get<std::string>() == "minority") {
            c.anomaly_class.reset();
          } else if (v.is_number_integer()) {
            c.anomaly_class = v.get<long>();
          } else {
            bad_key(k, "expected \"minority\" or an integer class id");
          }
        },
        [](const C& c) { return c.anomaly_class ? json(*c.anomaly_class) : json("minority"); }}},
      {"node_features",
       {[](C& c, const std::string& k, const json& v) {
          const auto s = as_string(k, v);
          if (s == "labels") c.node_features = NodeFeatures::Labels;
          else if (s == "attributes") c.node_features = NodeFeatures::Attributes;
          else if (s == "both") c.node_features = NodeFeatures::Both;
          else bad_key(k, "expected labels, attributes or both");
        },
        [](const C& c) {
          switch (c.node_features) {
            case NodeFeatures::Labels: return json("labels");
            case NodeFeatures::Attributes: return json("attributes");
            case NodeFeatures::Both: break;
          }
          return json("both");
        }}},
      {"max_degree", uint_key(&C::max_degree)},
      {"beta", real_key(&C::beta)},
      {"trials", uint_key(&C::trials)},
      {"seed", uint_key(&C::seed)},
      {"jobs", uint_key(&C::jobs)},
      {"dump_embeddings",
       {[](C& c, const std::string& k, const json& v) { c.dump_embeddings = as_bool(k, v); },
        [](const C& c) { return json(c.dump_embeddings); }}},
      {"epochs", nested_uint(&C::train, &TrainConfig::epochs)},
      {"s1_steps", nested_uint(&C::train, &TrainConfig::s1_steps)},
      {"s2_steps", nested_uint(&C::train, &TrainConfig::s2_steps)},
      {"w", nested_real(&C::train, &TrainConfig::w)},
      {"lr", nested_real(&C::train, &TrainConfig::lr)},
      {"drop_rate", nested_real(&C::train, &TrainConfig::drop_rate)},
      {"alpha", nested_real(&C::train, &TrainConfig::alpha)},
      {"k", nested_uint(&C::train, &TrainConfig::k)},
      {"lambda_lo", nested_real(&C::train, &TrainConfig::lambda_lo)},
      {"lambda_hi", nested_real(&C::train, &TrainConfig::lambda_hi)},
      {"K", nested_uint(&C::train, &TrainConfig::pool_size)},
      {"beta1", nested_real(&C::train, &TrainConfig::beta1)},
      {"beta2", nested_real(&C::train, &TrainConfig::beta2)},
      {"temp", nested_real(&C::train, &TrainConfig::temp)},
      {"tau_exp", nested_real(&C::train, &TrainConfig::tau_exp)},
      {"hidden", nested_uint(&C::train, &TrainConfig::hidden)},
      {"layers", nested_uint(&C::train, &TrainConfig::layers)},
      {"mixup",
       {[](C& c, const std::string& k, const json& v) {
          const auto s = as_string(k, v);
          if (s == "softmax") c.train.mixup = MixupMode::SoftmaxNormalized;
          else if (s == "verbatim") c.train.mixup = MixupMode::Verbatim;
          else bad_key(k, "expected softmax or verbatim");
        },
        [](const C& c) { return json(c.train.mixup == MixupMode::SoftmaxNormalized ? "softmax" : "verbatim"); }}},
      {"head_hidden", nested_uint(&C::head, &ScoreHeadConfig::hidden)},
      {"head_steps", nested_uint(&C::head, &ScoreHeadConfig::steps)},
      {"head_lr", nested_real(&C::head, &ScoreHeadConfig::lr)},
      {"head_standardize",
       {[](C& c, const std::string& k, const json& v) { c.head.standardize_inputs = as_bool(k, v); },
        [](const C& c) { return json(c.head.standardize_inputs); }}},
      {"score_normalizer",
       {[](C& c, const std::string& k, const json& v) {
          const auto s = as_string(k, v);
          if (s == "variance") c.head.normalizer = ScoreNormalizer::Variance;
          else if (s == "stddev") c.head.normalizer = ScoreNormalizer::StdDev;
          else bad_key(k, "expected variance or stddev");
        },
        [](const C& c) { return json(c.head.normalizer == ScoreNormalizer::Variance ? "variance" : "stddev"); }}},
  };
  return table;
}

const KeySpec* find_key(const std::string& key) {
  for (const auto& [name, spec] : key_table()) {
    if (name == key) return &spec;
  }
  return nullptr;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::InvalidConfig, what); };
  if (dataset.empty()) bad("dataset must not be empty");
  if (!(beta >= 0.0 && beta < 1.0)) bad("beta must lie in [0, 1)");
  if (trials < 1) bad("trials must be >= 1");
  if (jobs < 1) bad("jobs must be >= 1");
  if (head.hidden < 1 || head.steps < 1 || !(head.lr > 0.0)) bad("head settings must be positive");
  train.validate();
}

void set_config_key(ExperimentConfig& cfg, const std::string& key, const json& value) {
  if (key == "lambda_interval") {
    if (!value.is_array() || value.size() != 2) bad_key(key, "expected [lo, hi]");
    cfg.train.lambda_lo = as_real(key, value[0]);
    cfg.train.lambda_hi = as_real(key, value[1]);
    return;
  }
  const KeySpec* spec = find_key(key);
  if (spec == nullptr) fail(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  spec->set(cfg, key, value);
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidConfig, "config must be a JSON object");
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key != "grid") {
      set_config_key(cfg, key, value);
      continue;
    }
    if (!value.is_object()) bad_key("grid", "expected an object of key -> list");
    for (const auto& [axis, options] : value.items()) {
      if (axis == "grid" || (axis != "lambda_interval" && find_key(axis) == nullptr)) {
        fail(ErrorCode::InvalidConfig, "unknown grid key '" + axis + "'");
      }
      if (!options.is_array()) bad_key("grid." + axis, "expected a list");
      ExperimentConfig probe;
      for (const auto& o : options) set_config_key(probe, axis, o);
      cfg.grid.emplace_back(axis, std::vector<json>(options.begin(), options.end()));
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::InvalidConfig, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

json config_to_json(const ExperimentConfig& cfg) {
  json j = json::object();
  for (const auto& [name, spec] : key_table()) j[name] = spec.get(cfg);
  return j;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& entry : key_table()) out.push_back(entry.first);
    return out;
  }();
  return keys;
}

}  // namespace denoise

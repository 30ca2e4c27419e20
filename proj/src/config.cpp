#include "daef/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

namespace daef {

namespace {

using json = nlohmann::json;

std::string join(const std::vector<std::string>& lines) {
  std::string out = "invalid configuration:";
  for (const auto& l : lines) out += "\n  " + l;
  return out;
}

using Setter = std::function<void(const json&, RunConfig&)>;

struct Problem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::size_t as_count(const json& v, std::size_t min_value = 0) {
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min_value)) {
    throw Problem("expected an integer >= " + std::to_string(min_value) + ", got " + v.dump());
  }
  return v.get<std::size_t>();
}

double as_real(const json& v) {
  if (!v.is_number()) throw Problem("expected a number, got " + v.dump());
  return v.get<double>();
}

bool as_flag(const json& v) {
  if (!v.is_boolean()) throw Problem("expected true or false, got " + v.dump());
  return v.get<bool>();
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"image_size", [](const json& v, RunConfig& c) { c.train.model.image_size = as_count(v, 16); }},
      {"in_channels", [](const json& v, RunConfig& c) { c.train.model.in_channels = as_count(v, 1); }},
      {"num_classes", [](const json& v, RunConfig& c) { c.train.model.num_classes = as_count(v, 2); }},
      {"embed_dims",
       [](const json& v, RunConfig& c) {
         if (!v.is_array() || v.size() != 3) throw Problem("expected an array of 3 integers");
         for (std::size_t i = 0; i < 3; ++i) c.train.model.embed_dims[i] = as_count(v[i], 2);
       }},
      {"blocks_per_stage",
       [](const json& v, RunConfig& c) { c.train.model.blocks_per_stage = as_count(v, 1); }},
      {"strategy",
       [](const json& v, RunConfig& c) {
         if (!v.is_string()) throw Problem("expected a string, got " + v.dump());
         try {
           c.train.model.strategy = parse_strategy(v.get<std::string>());
         } catch (const std::invalid_argument& e) {
           throw Problem(e.what());
         }
       }},
      {"skip_connections",
       [](const json& v, RunConfig& c) {
         const std::size_t s = as_count(v);
         if (s > 2) throw Problem("expected 0, 1 or 2, got " + v.dump());
         c.train.model.skip_connections = s;
       }},
      {"expansion_ratio",
       [](const json& v, RunConfig& c) { c.train.model.expansion_ratio = as_count(v, 1); }},
      {"scca_use_eq2_order",
       [](const json& v, RunConfig& c) { c.train.model.scca_use_eq2_order = as_flag(v); }},
      {"t_residual_mlp_only",
       [](const json& v, RunConfig& c) { c.train.model.t_residual_mlp_only = as_flag(v); }},
      {"seed",
       [](const json& v, RunConfig& c) {
         c.train.model.seed = as_count(v);
         c.seed_set = true;
       }},
      {"steps", [](const json& v, RunConfig& c) { c.train.steps = as_count(v); }},
      {"batch_size", [](const json& v, RunConfig& c) { c.train.batch_size = as_count(v, 1); }},
      {"learning_rate",
       [](const json& v, RunConfig& c) {
         const double lr = as_real(v);
         if (lr < 0) throw Problem("must be nonnegative");
         c.train.sgd.learning_rate = lr;
       }},
      {"momentum",
       [](const json& v, RunConfig& c) {
         const double m = as_real(v);
         if (m < 0 || m >= 1) throw Problem("must lie in [0, 1)");
         c.train.sgd.momentum = m;
       }},
      {"weight_decay",
       [](const json& v, RunConfig& c) {
         const double wd = as_real(v);
         if (wd < 0) throw Problem("must be nonnegative");
         c.train.sgd.weight_decay = wd;
       }},
      {"num_shapes", [](const json& v, RunConfig& c) { c.train.num_shapes = as_count(v); }},
      {"eval_images", [](const json& v, RunConfig& c) { c.train.eval_images = as_count(v, 1); }},
      {"kernels",
       [](const json& v, RunConfig& c) {
         if (!v.is_array() || v.empty()) throw Problem("expected a nonempty array of kernel names");
         std::vector<std::string> names;
         for (const auto& k : v) {
           if (!k.is_string()) throw Problem("kernel names must be strings");
           const auto name = k.get<std::string>();
           if (name != "standard" && name != "efficient" && name != "transpose") {
             throw Problem("unknown kernel '" + name + "'");
           }
           names.push_back(name);
         }
         c.bench.kernels = std::move(names);
       }},
      {"n_sweep",
       [](const json& v, RunConfig& c) {
         if (!v.is_array() || v.empty()) throw Problem("expected a nonempty array of token counts");
         std::vector<std::size_t> ns;
         for (const auto& n : v) ns.push_back(as_count(n, 1));
         if (!std::is_sorted(ns.begin(), ns.end()) ||
             std::adjacent_find(ns.begin(), ns.end()) != ns.end()) {
           throw Problem("token counts must be strictly ascending");
         }
         c.bench.n_sweep = std::move(ns);
       }},
      {"d", [](const json& v, RunConfig& c) { c.bench.d = as_count(v, 2); }},
      {"reps", [](const json& v, RunConfig& c) { c.bench.reps = as_count(v, 3); }},
  };
  return table;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

RunConfig default_run_config() {
  RunConfig c;
  c.train.model.image_size = 32;
  c.train.model.num_classes = 2;
  c.train.model.embed_dims = {16, 32, 64};
  return c;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, fn] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("not valid JSON: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"top level must be a JSON object"});

  RunConfig config = default_run_config();
  std::vector<std::string> problems;
  for (const auto& [key, value] : doc.items()) {
    auto it = setters().find(key);
    if (it == setters().end()) {
      problems.push_back("unknown key '" + key + "'");
      continue;
    }
    try {
      it->second(value, config);
    } catch (const Problem& e) {
      problems.push_back(key + ": " + e.what());
    } catch (const json::exception& e) {
      problems.push_back(key + ": " + e.what());
    }
  }
  if (problems.empty()) {
    try {
      config.train.model.validate();
    } catch (const std::invalid_argument& e) {
      std::istringstream lines(e.what());
      std::string line;
      while (std::getline(lines, line)) {
        const auto at = line.find("- ");
        if (at != std::string::npos) problems.push_back(line.substr(at + 2));
      }
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path.string()});
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

}  // namespace daef

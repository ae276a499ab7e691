#include "hetvar/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hetvar {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + key + "'");
  }
}

std::vector<Method> parse_methods(const json& j) {
  std::vector<Method> out;
  for (const auto& m : j) {
    const auto name = m.get<std::string>();
    const auto method = method_from_name(name);
    if (!method) throw ConfigError("unknown method '" + name + "'");
    out.push_back(*method);
  }
  if (out.empty()) throw ConfigError("methods list is empty");
  return out;
}

void apply_shared(SimulationConfig& c, const json& obj) {
  c.beta0 = get_or(obj, "beta0", c.beta0);
  c.beta1 = get_or(obj, "beta1", c.beta1);
  c.replications = get_or<std::size_t>(obj, "replications", c.replications);
  c.master_seed = get_or<std::uint64_t>(obj, "master_seed", c.master_seed);
  c.alpha_level = get_or(obj, "alpha_level", c.alpha_level);
  c.chs_drop_adjustment = get_or(obj, "chs_drop_adjustment", c.chs_drop_adjustment);
  if (obj.contains("methods")) c.methods = parse_methods(obj.at("methods"));
  if (obj.contains("kernel")) {
    const auto k = obj.at("kernel").get<std::string>();
    if (k == "triangular") c.kernel_kind = KernelKind::Triangular;
    else if (k == "uniform") c.kernel_kind = KernelKind::Uniform;
    else throw ConfigError("kernel must be 'triangular' or 'uniform'");
  }
  if (obj.contains("bandwidth")) {
    const auto& b = obj.at("bandwidth");
    if (b.is_string()) {
      if (b.get<std::string>() != "auto")
        throw ConfigError("bandwidth must be 'auto' or a nonnegative integer");
      c.bandwidth_auto = true;
    } else if (b.is_number_unsigned()) {
      c.bandwidth_auto = false;
      c.bandwidth = b.get<std::size_t>();
    } else {
      throw ConfigError("bandwidth must be 'auto' or a nonnegative integer");
    }
  }
  if (obj.contains("weights")) {
    const auto& w = obj.at("weights");
    require_keys(w, {"alpha", "gamma", "eps"}, "weights");
    c.w_alpha = get_or(w, "alpha", c.w_alpha);
    c.w_gamma = get_or(w, "gamma", c.w_gamma);
    c.w_eps = get_or(w, "eps", c.w_eps);
  }
  if (obj.contains("het")) {
    const auto& h = obj.at("het");
    require_keys(h, {"pattern", "amplitude"}, "het");
    if (h.contains("pattern")) {
      const auto p = het_pattern_from_name(h.at("pattern").get<std::string>());
      if (!p) throw ConfigError("het pattern must be none|checkerboard|time-alternating");
      c.het_pattern = *p;
    }
    c.het_amplitude = get_or(h, "amplitude", c.het_amplitude);
  }
}

const std::set<std::string> kSharedKeys = {
    "rows",    "beta0",   "beta1",     "replications", "master_seed",
    "methods", "kernel",  "bandwidth", "weights",      "het",
    "alpha_level", "chs_drop_adjustment"};

const std::set<std::string> kRowKeys = {"label", "clusters", "periods", "rho",
                                        "replications", "master_seed"};

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  require_keys(doc, kSharedKeys, "config root");
  if (!doc.contains("rows") || !doc.at("rows").is_array() || doc.at("rows").empty())
    throw ConfigError("config must contain a nonempty 'rows' array");

  SimulationConfig shared;
  apply_shared(shared, doc);

  RunConfig rc;
  for (const auto& row : doc.at("rows")) {
    if (!row.is_object()) throw ConfigError("rows entries must be objects");
    require_keys(row, kRowKeys, "row");
    SimulationConfig c = shared;
    c.label = get_or<std::string>(row, "label", "");
    if (!row.contains("clusters") || !row.contains("periods") || !row.contains("rho"))
      throw ConfigError("each row needs 'clusters', 'periods' and 'rho'");
    c.clusters = row.at("clusters").get<std::size_t>();
    c.periods = row.at("periods").get<std::size_t>();
    c.rho = row.at("rho").get<double>();
    c.replications = get_or<std::size_t>(row, "replications", c.replications);
    c.master_seed = get_or<std::uint64_t>(row, "master_seed", c.master_seed);
    c.validate();
    rc.rows.push_back(std::move(c));
  }
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace hetvar

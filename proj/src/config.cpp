#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "esdlab/error.hpp"
#include "esdlab/harness.hpp"

namespace esdlab {

using json = nlohmann::ordered_json;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::circular: return "circular";
    case ExperimentKind::universality: return "universality";
    case ExperimentKind::hermitize: return "hermitize";
    case ExperimentKind::ds_solve: return "ds-solve";
    case ExperimentKind::tails: return "tails";
    case ExperimentKind::lemmas: return "lemmas";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::circular, ExperimentKind::universality, ExperimentKind::hermitize,
                 ExperimentKind::ds_solve, ExperimentKind::tails, ExperimentKind::lemmas}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

std::string to_string(ReferenceLaw law) { return law == ReferenceLaw::circular ? "circular" : "mp_derived"; }

ReferenceLaw parse_reference_law(const std::string& name) {
  if (name == "circular") return ReferenceLaw::circular;
  if (name == "mp_derived") return ReferenceLaw::mp_derived;
  throw ConfigError("unknown reference law '" + name + "'");
}

std::map<std::string, double> default_thresholds(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::circular:
      return {{"radial_ks", 0.05},
              {"angular_ks", 0.05},
              {"ks_pass_fraction", 0.9},
              {"in_disk_radius", 1.05},
              {"in_disk_fraction", 0.99}};
    case ExperimentKind::universality:
      return {{"bl_distance", 0.1}, {"require_decreasing", 1.0}};
    case ExperimentKind::hermitize:
      return {{"potential_gap", 0.05}, {"regularization_gap", 0.02}, {"pass_fraction", 0.9}, {"girko_error", 1e-3}};
    case ExperimentKind::ds_solve:
      return {{"oracle_error", 1e-8},     {"oracle_points", 50},      {"oracle_eta", 1e-3},
              {"density_error", 1e-2},    {"density_window_lo", 0.1}, {"density_window_hi", 3.9},
              {"mass_tolerance", 0.02},   {"gram_ks", 0.05}};
    case ExperimentKind::tails:
      return {{"sigma_floor_exponent", 10.0},
              {"sigma_ceiling_exponent", 10.0},
              {"ratio_floor", 0.0},
              {"distance_constant", 0.5},
              {"dist2_tolerance", 0.05}};
    case ExperimentKind::lemmas:
      return {{"a4_relative", 1e-9}, {"det_relative", 1e-6}};
  }
  return {};
}

std::map<std::string, double> ExperimentConfig::effective_thresholds() const {
  auto t = default_thresholds(experiment);
  for (const auto& [k, v] : thresholds) t[k] = v;
  return t;
}

void ExperimentConfig::validate() const {
  if (n_list.empty()) throw ConfigError("n_list must not be empty");
  for (auto n : n_list) {
    if (n < 2) throw ConfigError("every n must be at least 2");
    if (n >= (std::size_t{1} << 31)) throw ConfigError("n too large");
  }
  if (trials == 0) throw ConfigError("trials must be positive");
  if (trials >= (std::size_t{1} << 30)) throw ConfigError("too many trials");
  distribution_x.validate();
  distribution_y.validate();
  if (mode == AssemblyMode::hadamard_profile) profile.validate();
  if (figures != "none" && figures != "first" && figures != "all") {
    throw ConfigError("figures must be none, first or all");
  }
  if (!(regularization_exponent > 0.0)) throw ConfigError("regularization_exponent must be positive");
  if (lattice) lattice->validate();
  for (const auto& [u, v] : uv_list) {
    if (u == 0.0 || !(v > 0.0)) throw ConfigError("uv_list entries need u != 0 and v > 0");
  }
  const auto defaults = default_thresholds(experiment);
  for (const auto& [k, v] : thresholds) {
    if (!defaults.count(k)) throw ConfigError("unknown threshold '" + k + "' for " + to_string(experiment));
    if (!std::isfinite(v)) throw ConfigError("threshold '" + k + "' must be finite");
  }
  if (experiment == ExperimentKind::universality && n_list.size() > 1) {
    for (std::size_t i = 1; i < n_list.size(); ++i) {
      if (n_list[i] <= n_list[i - 1]) throw ConfigError("n_list must be increasing");
    }
  }
  if (experiment == ExperimentKind::ds_solve) {
    if (ds.h_atoms.size() != ds.h_weights.size()) throw ConfigError("ds.h_atoms and ds.h_weights differ in length");
    MeasureH{ds.h_atoms, ds.h_weights}.validate();
    if (!(ds.c > 0.0)) throw ConfigError("ds.c must be positive");
    if (ds.x_points < 2 || !(ds.x_max > ds.x_min)) throw ConfigError("ds x grid needs two points and x_max > x_min");
  }
  if (experiment == ExperimentKind::tails) {
    if (tails.distance_d == 0 || tails.distance_d >= tails.distance_n) throw ConfigError("tails needs 0 < d < n");
    if (tails.distance_trials == 0) throw ConfigError("tails.distance_trials must be positive");
  }
  if (experiment == ExperimentKind::lemmas && (lemmas.cases == 0 || lemmas.max_size < 2)) {
    throw ConfigError("lemmas needs cases > 0 and max_size >= 2");
  }
}

namespace {

// Wraps a JSON object and rejects keys that were never read.
class Strict {
 public:
  Strict(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing '" + key + "'");
    return j_.at(key);
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

double as_double(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

std::size_t as_size(const json& j, const std::string& where) {
  if (!j.is_number_integer() || (!j.is_number_unsigned() && j.get<long long>() < 0)) {
    throw ConfigError(where + ": expected a nonnegative integer");
  }
  return j.get<std::size_t>();
}

bool as_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError(where + ": expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected a string");
  return j.get<std::string>();
}

cplx as_complex(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ConfigError(where + ": expected a number or [re, im]");
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

template <class T, class F>
std::vector<T> as_list(const json& j, const std::string& where, F each) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(each(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

template <class T>
void read(Strict& s, const std::string& key, T& out) {
  const json* j = s.find(key);
  if (!j) return;
  const std::string where = s.where() + "." + key;
  if constexpr (std::is_same_v<T, double>) {
    out = as_double(*j, where);
  } else if constexpr (std::is_same_v<T, bool>) {
    out = as_bool(*j, where);
  } else if constexpr (std::is_same_v<T, std::size_t>) {
    out = as_size(*j, where);
  } else if constexpr (std::is_same_v<T, std::string>) {
    out = as_string(*j, where);
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    out = as_list<double>(*j, where, as_double);
  } else if constexpr (std::is_same_v<T, std::vector<cplx>>) {
    out = as_list<cplx>(*j, where, as_complex);
  } else {
    static_assert(sizeof(T) == 0, "unsupported field type");
  }
}

ScalarDistribution parse_distribution(const json& j, const std::string& where) {
  Strict s(j, where);
  auto d = ScalarDistribution::of(parse_distribution_kind(as_string(s.at("kind"), where + ".kind")));
  read(s, "parameter", d.parameter);
  s.finish();
  return d;
}

json distribution_json(const ScalarDistribution& d) {
  return json{{"kind", to_string(d.kind)}, {"parameter", d.parameter}};
}

BaseMatrixSpec parse_base(const json& j, const std::string& where) {
  Strict s(j, where);
  BaseMatrixSpec b;
  b.kind = parse_base_kind(as_string(s.at("kind"), where + ".kind"));
  read(s, "block_a", b.block_a);
  read(s, "block_b", b.block_b);
  read(s, "split", b.split);
  read(s, "sqrt_n_scaled", b.sqrt_n_scaled);
  read(s, "rank", b.rank);
  read(s, "magnitude", b.magnitude);
  read(s, "atoms", b.atoms);
  read(s, "explicit_size", b.explicit_size);
  read(s, "entries", b.entries);
  s.finish();
  return b;
}

json base_json(const BaseMatrixSpec& b) {
  json atoms = json::array();
  for (auto a : b.atoms) atoms.push_back(complex_json(a));
  json entries = json::array();
  for (auto e : b.entries) entries.push_back(complex_json(e));
  return json{{"kind", to_string(b.kind)},
              {"block_a", b.block_a},
              {"block_b", b.block_b},
              {"split", b.split},
              {"sqrt_n_scaled", b.sqrt_n_scaled},
              {"rank", b.rank},
              {"magnitude", b.magnitude},
              {"atoms", atoms},
              {"explicit_size", b.explicit_size},
              {"entries", entries}};
}

ProfileSpec parse_profile(const json& j, const std::string& where) {
  Strict s(j, where);
  ProfileSpec p;
  p.kind = parse_profile_kind(as_string(s.at("kind"), where + ".kind"));
  read(s, "low", p.low);
  read(s, "high", p.high);
  s.finish();
  return p;
}

std::pair<double, double> as_pair(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(where + ": expected a pair of numbers");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Strict s(root, "config");
  const auto version = as_size(s.at("schema_version"), "config.schema_version");
  if (version != ExperimentConfig::kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(version));
  }
  ExperimentConfig c;
  c.experiment = parse_experiment_kind(as_string(s.at("experiment"), "config.experiment"));
  if (const json* j = s.find("n_list")) c.n_list = as_list<std::size_t>(*j, "config.n_list", as_size);
  read(s, "trials", c.trials);
  if (const json* j = s.find("master_seed")) {
    if (!j->is_number_unsigned() && !(j->is_number_integer() && j->get<long long>() >= 0)) {
      throw ConfigError("config.master_seed: expected an unsigned 64-bit integer");
    }
    c.master_seed = j->get<std::uint64_t>();
  }
  read(s, "output_dir", c.output_dir);
  if (const json* j = s.find("distribution_x")) c.distribution_x = parse_distribution(*j, "config.distribution_x");
  if (const json* j = s.find("distribution_y")) c.distribution_y = parse_distribution(*j, "config.distribution_y");
  read(s, "shared_stream", c.shared_stream);
  if (const json* j = s.find("base")) c.base = parse_base(*j, "config.base");
  if (const json* j = s.find("mode")) c.mode = parse_assembly_mode(as_string(*j, "config.mode"));
  if (const json* j = s.find("profile")) c.profile = parse_profile(*j, "config.profile");
  if (const json* j = s.find("left")) c.left = parse_base(*j, "config.left");
  if (const json* j = s.find("right")) c.right = parse_base(*j, "config.right");
  read(s, "z_list", c.z_list);
  if (const json* j = s.find("lattice"); j && !j->is_null()) {
    Strict l(*j, "config.lattice");
    LatticeSpec spec;
    spec.center = as_complex(l.at("center"), "config.lattice.center");
    read(l, "extent", spec.extent);
    read(l, "step", spec.step);
    l.finish();
    c.lattice = spec;
  }
  if (const json* j = s.find("uv_list")) c.uv_list = as_list<std::pair<double, double>>(*j, "config.uv_list", as_pair);
  if (const json* j = s.find("reference")) c.reference = parse_reference_law(as_string(*j, "config.reference"));
  read(s, "regularization_exponent", c.regularization_exponent);
  read(s, "figures", c.figures);
  if (const json* j = s.find("ds")) {
    Strict d(*j, "config.ds");
    read(d, "h_atoms", c.ds.h_atoms);
    read(d, "h_weights", c.ds.h_weights);
    read(d, "c", c.ds.c);
    read(d, "x_min", c.ds.x_min);
    read(d, "x_max", c.ds.x_max);
    read(d, "x_points", c.ds.x_points);
    read(d, "eta_schedule", c.ds.eta_schedule);
    if (const json* w = d.find("check_window")) {
      if (w->is_null()) {
        c.ds.check_window.reset();
      } else {
        c.ds.check_window = as_pair(*w, "config.ds.check_window");
      }
    }
    read(d, "damping", c.ds.damping);
    read(d, "max_iterations", c.ds.max_iterations);
    read(d, "tolerance", c.ds.tolerance);
    read(d, "probe_uniqueness", c.ds.probe_uniqueness);
    d.finish();
  }
  if (const json* j = s.find("tails")) {
    Strict t(*j, "config.tails");
    read(t, "distance_n", c.tails.distance_n);
    read(t, "distance_d", c.tails.distance_d);
    read(t, "distance_trials", c.tails.distance_trials);
    read(t, "talagrand_r", c.tails.talagrand_r);
    t.finish();
  }
  if (const json* j = s.find("lemmas")) {
    Strict l(*j, "config.lemmas");
    read(l, "cases", c.lemmas.cases);
    read(l, "max_size", c.lemmas.max_size);
    l.finish();
  }
  if (const json* j = s.find("thresholds")) {
    if (!j->is_object()) throw ConfigError("config.thresholds: expected an object");
    for (const auto& [k, v] : j->items()) c.thresholds[k] = as_double(v, "config.thresholds." + k);
  }
  s.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json z_list = json::array();
  for (auto z : c.z_list) z_list.push_back(complex_json(z));
  json uv = json::array();
  for (const auto& [u, v] : c.uv_list) uv.push_back(json::array({u, v}));
  json lattice = nullptr;
  if (c.lattice) {
    lattice = json{{"center", complex_json(c.lattice->center)}, {"extent", c.lattice->extent}, {"step", c.lattice->step}};
  }
  json window = nullptr;
  if (c.ds.check_window) window = json::array({c.ds.check_window->first, c.ds.check_window->second});
  json thresholds = json::object();
  for (const auto& [k, v] : c.thresholds) thresholds[k] = v;

  const json root{
      {"schema_version", ExperimentConfig::kSchemaVersion},
      {"experiment", to_string(c.experiment)},
      {"n_list", c.n_list},
      {"trials", c.trials},
      {"master_seed", c.master_seed},
      {"output_dir", c.output_dir},
      {"distribution_x", distribution_json(c.distribution_x)},
      {"distribution_y", distribution_json(c.distribution_y)},
      {"shared_stream", c.shared_stream},
      {"base", base_json(c.base)},
      {"mode", to_string(c.mode)},
      {"profile", json{{"kind", to_string(c.profile.kind)}, {"low", c.profile.low}, {"high", c.profile.high}}},
      {"left", base_json(c.left)},
      {"right", base_json(c.right)},
      {"z_list", z_list},
      {"lattice", lattice},
      {"uv_list", uv},
      {"reference", to_string(c.reference)},
      {"regularization_exponent", c.regularization_exponent},
      {"figures", c.figures},
      {"ds",
       json{{"h_atoms", c.ds.h_atoms},
            {"h_weights", c.ds.h_weights},
            {"c", c.ds.c},
            {"x_min", c.ds.x_min},
            {"x_max", c.ds.x_max},
            {"x_points", c.ds.x_points},
            {"eta_schedule", c.ds.eta_schedule},
            {"check_window", window},
            {"damping", c.ds.damping},
            {"max_iterations", c.ds.max_iterations},
            {"tolerance", c.ds.tolerance},
            {"probe_uniqueness", c.ds.probe_uniqueness}}},
      {"tails",
       json{{"distance_n", c.tails.distance_n},
            {"distance_d", c.tails.distance_d},
            {"distance_trials", c.tails.distance_trials},
            {"talagrand_r", c.tails.talagrand_r}}},
      {"lemmas", json{{"cases", c.lemmas.cases}, {"max_size", c.lemmas.max_size}}},
      {"thresholds", thresholds},
  };
  return root.dump(2);
}

}  // namespace esdlab

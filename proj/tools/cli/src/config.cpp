#include "nelcorr_cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nelcorr/error.hpp"

namespace nelcorr::cli {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& field(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(join(path, key), "missing required field");
  return *it;
}

const json* optional_field(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

double positive(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (!(x > 0.0)) throw ConfigError(path, "must be positive");
  return x;
}

std::size_t count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(path, "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], index(path, i)));
  return out;
}

Grid parse_grid(const json& v, const std::string& path) {
  const double lo = number(field(v, path, "min"), join(path, "min"));
  const double hi = number(field(v, path, "max"), join(path, "max"));
  const std::size_t n = count(field(v, path, "n"), join(path, "n"));
  if (!(hi > lo)) throw ConfigError(join(path, "max"), "must exceed min");
  if (n < 5) throw ConfigError(join(path, "n"), "needs at least 5 points");
  return Grid(lo, hi, n);
}

struct PotentialSpec {
  Potential potential;
  std::optional<Grid> default_grid;
};

PotentialSpec parse_potential(const json& v, const std::string& path) {
  const std::string type = text(field(v, path, "type"), join(path, "type"));
  if (type == "harmonic") {
    const double w = positive(field(v, path, "omega"), join(path, "omega"));
    return {Potential::harmonic(w), default_harmonic_grid(w)};
  }
  if (type == "infinite_well" || type == "box") {
    const double l = positive(field(v, path, "half_width"), join(path, "half_width"));
    return {Potential::infinite_well(l), default_box_grid(l)};
  }
  if (type == "double_well") {
    const double h = positive(field(v, path, "barrier_height"), join(path, "barrier_height"));
    const double d = positive(field(v, path, "well_separation"), join(path, "well_separation"));
    return {Potential::double_well(h, d), std::nullopt};
  }
  if (type == "tabulated") {
    const Grid g = parse_grid(field(v, path, "grid"), join(path, "grid"));
    auto values = numbers(field(v, path, "values"), join(path, "values"));
    if (values.size() != g.size()) throw ConfigError(join(path, "values"), "length must match grid.n");
    return {Potential::tabulated(g, std::move(values)), std::nullopt};
  }
  throw ConfigError(join(path, "type"), "unknown potential '" + type + "'");
}

ClusterSpec parse_cluster(const json& v, const std::string& path) {
  auto pot = parse_potential(field(v, path, "potential"), join(path, "potential"));
  std::optional<Grid> grid = pot.default_grid;
  if (const json* g = optional_field(v, "grid")) grid = parse_grid(*g, join(path, "grid"));
  if (!grid) throw ConfigError(join(path, "grid"), "missing required field (no default for this potential)");
  std::size_t levels = 0;
  if (const json* l = optional_field(v, "levels")) levels = count(*l, join(path, "levels"));
  bool numeric = false;
  if (const json* s = optional_field(v, "solver")) {
    const std::string solver = text(*s, join(path, "solver"));
    if (solver == "numeric") {
      numeric = true;
    } else if (solver != "analytic") {
      throw ConfigError(join(path, "solver"), "expected 'analytic' or 'numeric'");
    }
  }
  return {std::move(pot.potential), *grid, levels, numeric};
}

double coefficient(const json& v, const std::string& path) {
  if (v.is_array()) {
    if (v.size() != 2) throw ConfigError(path, "complex coefficients are [re, im]");
    const double re = number(v[0], index(path, 0));
    const double im = number(v[1], index(path, 1));
    if (im != 0.0) throw ConfigError(index(path, 1), "complex coefficients are not supported (imaginary part must be 0)");
    return re;
  }
  return number(v, path);
}

std::vector<Term> parse_terms(const json& v, const std::string& path, std::size_t clusters) {
  const json& list = field(v, path, "terms");
  const std::string lpath = join(path, "terms");
  if (!list.is_array() || list.empty()) throw ConfigError(lpath, "expected a non-empty array");
  std::vector<Term> terms;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string tp = index(lpath, i);
    Term t;
    t.coefficient = coefficient(field(list[i], tp, "coefficient"), join(tp, "coefficient"));
    const json& idx = field(list[i], tp, "indices");
    if (!idx.is_array() || idx.size() != clusters) {
      throw ConfigError(join(tp, "indices"), "expected one eigenfunction index per cluster");
    }
    for (std::size_t c = 0; c < idx.size(); ++c) t.indices.push_back(count(idx[c], index(join(tp, "indices"), c)));
    terms.push_back(std::move(t));
  }
  return terms;
}

Observable parse_observable(const json& v, const std::string& path, std::size_t default_cluster) {
  const std::string type = text(field(v, path, "type"), join(path, "type"));
  std::size_t cluster = default_cluster;
  if (const json* c = optional_field(v, "cluster")) cluster = count(*c, join(path, "cluster"));
  if (type == "position") return Observable::position(cluster);
  if (type == "sign") return Observable::sign(cluster);
  if (type == "constant") {
    double value = 1.0;
    if (const json* x = optional_field(v, "value")) value = number(*x, join(path, "value"));
    return Observable::constant(cluster, value);
  }
  if (type == "indicator") {
    const double a = number(field(v, path, "a"), join(path, "a"));
    const double b = number(field(v, path, "b"), join(path, "b"));
    if (!(a < b)) throw ConfigError(join(path, "b"), "must exceed a");
    return Observable::indicator(cluster, a, b);
  }
  if (type == "tabulated") {
    const Grid g = parse_grid(field(v, path, "grid"), join(path, "grid"));
    auto values = numbers(field(v, path, "values"), join(path, "values"));
    if (values.size() != g.size()) throw ConfigError(join(path, "values"), "length must match grid.n");
    return Observable::tabulated(cluster, g, std::move(values));
  }
  throw ConfigError(join(path, "type"), "unknown observable '" + type + "'");
}

std::vector<double> parse_lags(const json& v, const std::string& path) {
  std::vector<double> lags;
  if (v.is_array()) {
    lags = numbers(v, path);
  } else if (v.is_object()) {
    const double start = number(field(v, path, "start"), join(path, "start"));
    const double stop = number(field(v, path, "stop"), join(path, "stop"));
    const double step = positive(field(v, path, "step"), join(path, "step"));
    if (stop < start) throw ConfigError(join(path, "stop"), "must not be below start");
    // Inclusive of stop up to rounding in the step count.
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) lags.push_back(start + static_cast<double>(i) * step);
  } else {
    throw ConfigError(path, "expected a list or {start, stop, step}");
  }
  if (lags.empty()) throw ConfigError(path, "lag list is empty");
  for (std::size_t i = 1; i < lags.size(); ++i) {
    if (!(lags[i] > lags[i - 1])) throw ConfigError(index(path, i), "lags must be strictly increasing");
  }
  return lags;
}

McSpec parse_mc(const json& v, const std::string& path) {
  McSpec mc;
  if (const json* x = optional_field(v, "n_paths")) {
    mc.n_paths = count(*x, join(path, "n_paths"));
    if (mc.n_paths < 2) throw ConfigError(join(path, "n_paths"), "needs at least 2 paths");
  }
  if (const json* x = optional_field(v, "dt")) mc.dt = positive(*x, join(path, "dt"));
  if (const json* x = optional_field(v, "seed")) {
    if (!x->is_number_unsigned()) throw ConfigError(join(path, "seed"), "expected a non-negative integer");
    mc.seed = x->get<std::uint64_t>();
  }
  if (const json* x = optional_field(v, "epsilon")) mc.epsilon = positive(*x, join(path, "epsilon"));
  if (const json* x = optional_field(v, "horizon")) mc.horizon = positive(*x, join(path, "horizon"));
  if (const json* x = optional_field(v, "epsilons")) {
    mc.epsilons = numbers(*x, join(path, "epsilons"));
    for (std::size_t i = 0; i < mc.epsilons.size(); ++i) {
      const std::string ep = index(join(path, "epsilons"), i);
      if (!(mc.epsilons[i] > 0.0)) throw ConfigError(ep, "must be positive");
      if (i > 0 && !(mc.epsilons[i] < mc.epsilons[i - 1])) throw ConfigError(ep, "epsilons must be strictly decreasing");
    }
  }
  return mc;
}

ChshSpec parse_chsh(const json& v, const std::string& path) {
  ChshSpec spec;
  if (const json* x = optional_field(v, "cluster")) spec.cluster = count(*x, join(path, "cluster"));
  if (const json* x = optional_field(v, "observable")) {
    spec.observable = parse_observable(*x, join(path, "observable"), spec.cluster);
  }
  if (const json* x = optional_field(v, "times")) {
    const std::string tp = join(path, "times");
    spec.times = ChshTimes{number(field(*x, tp, "t1"), join(tp, "t1")), number(field(*x, tp, "t2"), join(tp, "t2")),
                           number(field(*x, tp, "s1"), join(tp, "s1")), number(field(*x, tp, "s2"), join(tp, "s2"))};
  }
  if (const json* x = optional_field(v, "barrier_sweep")) {
    spec.barrier_sweep = numbers(*x, join(path, "barrier_sweep"));
    for (std::size_t i = 0; i < spec.barrier_sweep.size(); ++i) {
      if (!(spec.barrier_sweep[i] > 0.0)) throw ConfigError(index(join(path, "barrier_sweep"), i), "must be positive");
    }
  }
  return spec;
}

}  // namespace

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "expected a JSON object");
  RunConfig cfg;
  if (const json* cl = optional_field(doc, "clusters")) {
    if (!cl->is_array() || cl->empty()) throw ConfigError("clusters", "expected a non-empty array");
    for (std::size_t i = 0; i < cl->size(); ++i) cfg.clusters.push_back(parse_cluster((*cl)[i], index("clusters", i)));
  }
  if (const json* st = optional_field(doc, "state")) {
    if (cfg.clusters.empty()) throw ConfigError("clusters", "missing required field (needed by state)");
    cfg.terms = parse_terms(*st, "state", cfg.clusters.size());
  }
  if (const json* ob = optional_field(doc, "observables")) {
    cfg.f = parse_observable(field(*ob, "observables", "f"), "observables.f", 0);
    cfg.g = parse_observable(field(*ob, "observables", "g"), "observables.g", cfg.clusters.size() > 1 ? 1 : 0);
    for (const auto* o : {&*cfg.f, &*cfg.g}) {
      if (!cfg.clusters.empty() && o->cluster() >= cfg.clusters.size()) {
        throw ConfigError(o == &*cfg.f ? "observables.f.cluster" : "observables.g.cluster", "no such cluster");
      }
    }
  }
  if (const json* lg = optional_field(doc, "lags")) cfg.lags = parse_lags(*lg, "lags");
  if (const json* mc = optional_field(doc, "mc")) cfg.mc = parse_mc(*mc, "mc");
  if (const json* ch = optional_field(doc, "chsh")) cfg.chsh = parse_chsh(*ch, "chsh");
  if (const json* out = optional_field(doc, "output")) {
    if (const json* f = optional_field(*out, "format")) {
      const std::string fmt = text(*f, "output.format");
      if (fmt == "csv") {
        cfg.format = OutputFormat::csv;
      } else if (fmt == "json") {
        cfg.format = OutputFormat::json;
      } else {
        throw ConfigError("output.format", "expected 'csv' or 'json'");
      }
    }
    if (const json* p = optional_field(*out, "path")) cfg.output_path = text(*p, "output.path");
  }
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset to line and column.
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col), "invalid JSON");
  }
  return parse_config(doc);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void required(const RunConfig& config, std::initializer_list<Need> needs) {
  for (Need n : needs) {
    switch (n) {
      case Need::state:
        if (config.clusters.empty()) throw ConfigError("clusters", "missing required field");
        if (config.terms.empty()) throw ConfigError("state", "missing required field");
        break;
      case Need::observables:
        if (!config.f || !config.g) throw ConfigError("observables", "missing required field");
        break;
      case Need::lags:
        if (config.lags.empty()) throw ConfigError("lags", "missing required field");
        break;
      case Need::mc_seed:
        if (!config.mc.seed) throw ConfigError("mc.seed", "missing required field (or pass --seed)");
        break;
      case Need::epsilons:
        if (config.mc.epsilons.empty()) throw ConfigError("mc.epsilons", "missing required field or empty list");
        break;
    }
  }
}

EigenSystem build_cluster(const ClusterSpec& spec) {
  const std::size_t k = std::max<std::size_t>(spec.levels, 2);
  if (!spec.numeric) {
    if (const auto* h = std::get_if<Harmonic>(&spec.potential.kind())) return harmonic_eigensystem(h->omega, k, spec.grid);
    if (const auto* b = std::get_if<InfiniteWell>(&spec.potential.kind())) {
      return box_eigensystem(b->half_width, k, spec.grid);
    }
  }
  return solve_eigensystem(spec.potential, spec.grid, k);
}

CompositeState build_state(const RunConfig& config) {
  required(config, {Need::state});
  std::vector<EigenSystem> systems;
  for (std::size_t c = 0; c < config.clusters.size(); ++c) {
    ClusterSpec spec = config.clusters[c];
    std::size_t needed = 0;
    for (const auto& t : config.terms) needed = std::max(needed, t.indices[c] + 1);
    if (spec.levels != 0 && spec.levels < needed) {
      throw ConfigError(index("clusters", c) + ".levels", "state uses level " + std::to_string(needed - 1));
    }
    spec.levels = std::max(spec.levels, needed);
    systems.push_back(build_cluster(spec));
  }
  return build_composite_state(std::move(systems), config.terms);
}

}  // namespace nelcorr::cli

#include "nelcorr_cli/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace nelcorr::cli {

using nlohmann::json;

namespace {

// JSON has no NaN; it travels as null.
ojson number_or_null(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }
double from_number_or_null(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Method method_from_string(const std::string& s) {
  for (Method m : {Method::qm, Method::bohm, Method::nelson_spectral, Method::nelson_mc}) {
    if (s == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown method '" + s + "'");
}

ojson matrix_json(const Matrix2& m) { return ojson::array({ojson::array({m[0][0], m[0][1]}), ojson::array({m[1][0], m[1][1]})}); }

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string series_csv(const CorrelationSeries& s) {
  std::string out;
  if (s.stderr_values) {
    out = "lag,estimate,stderr\n";
    for (std::size_t i = 0; i < s.lags.size(); ++i) {
      out += format_number(s.lags[i]) + "," + format_number(s.values[i]) + "," + format_number((*s.stderr_values)[i]) + "\n";
    }
    return out;
  }
  out = "lag,value,method\n";
  const std::string m = to_string(s.method);
  for (std::size_t i = 0; i < s.lags.size(); ++i) {
    out += format_number(s.lags[i]) + "," + format_number(s.values[i]) + "," + m + "\n";
  }
  return out;
}

std::string comparison_csv(const TheoryComparison& c) {
  std::string out = c.nelson ? "lag,qm,bohm,nelson\n" : "lag,qm,bohm\n";
  for (std::size_t i = 0; i < c.qm.lags.size(); ++i) {
    out += format_number(c.qm.lags[i]) + "," + format_number(c.qm.values[i]) + "," + format_number(c.bohm.values[i]);
    if (c.nelson) out += "," + format_number(c.nelson->values[i]);
    out += "\n";
  }
  return out;
}

std::string epsilon_csv(const std::vector<EpsilonRow>& rows) {
  std::string out = "epsilon,value,stderr,spectral_ref,abs_dev\n";
  for (const auto& r : rows) {
    out += format_number(r.epsilon) + "," + format_number(r.value) + "," + format_number(r.stderr_value) + "," +
           format_number(r.spectral_ref) + "," + format_number(r.abs_dev) + "\n";
  }
  return out;
}

std::string chsh_csv(const std::vector<ChshReport>& reports) {
  std::string out = "alpha,omega,t1,t2,s1,s2,E11,E12,E21,E22,S,classical_feasible\n";
  for (const auto& r : reports) {
    for (double v : {r.alpha, r.omega, r.times.t1, r.times.t2, r.times.s1, r.times.s2, r.correlations[0][0],
                     r.correlations[0][1], r.correlations[1][0], r.correlations[1][1], r.S}) {
      out += format_number(v) + ",";
    }
    out += r.classical_feasible ? "true\n" : "false\n";
  }
  return out;
}

std::string eigen_csv(const EigenSystem& es) {
  std::string out = "x";
  for (std::size_t k = 0; k < es.size(); ++k) out += ",psi_" + std::to_string(k);
  out += "\n";
  for (std::size_t i = 0; i < es.grid.size(); ++i) {
    out += format_number(es.grid[i]);
    for (const auto& f : es.eigenfunctions) out += "," + format_number(f.values[i]);
    out += "\n";
  }
  return out;
}

std::string paths_dump(const Ensemble& e) {
  std::string out;
  const std::size_t per_path = e.t_grid.size() * e.n_clusters;
  for (std::size_t p = 0; p < e.n_paths; ++p) {
    for (std::size_t k = 0; k < per_path; ++k) {
      if (k) out += ' ';
      out += format_number(e.positions[p * per_path + k]);
    }
    out += '\n';
  }
  return out;
}

ojson to_json(const CorrelationSeries& s) {
  ojson j;
  j["method"] = to_string(s.method);
  j["lags"] = s.lags;
  j["values"] = s.values;
  if (s.stderr_values) j["stderr"] = *s.stderr_values;
  return j;
}

CorrelationSeries series_from_json(const json& j) {
  CorrelationSeries s;
  s.method = method_from_string(j.at("method").get<std::string>());
  s.lags = j.at("lags").get<std::vector<double>>();
  s.values = j.at("values").get<std::vector<double>>();
  if (j.contains("stderr")) s.stderr_values = j.at("stderr").get<std::vector<double>>();
  return s;
}

ojson to_json(const std::vector<TrigComponent>& components) {
  ojson a = ojson::array();
  for (const auto& c : components) a.push_back({{"amplitude", c.amplitude}, {"omega", c.omega}});
  return a;
}

ojson comparison_summary(const TheoryComparison& c) {
  ojson j;
  j["max_abs_dev_qm_nelson"] = c.nelson ? ojson(c.max_abs_dev_qm_nelson) : ojson(nullptr);
  j["max_abs_dev_qm_bohm"] = c.max_abs_dev_qm_bohm;
  j["equal_time_agreement"] = c.equal_time_spread;
  j["nelson_available"] = c.nelson.has_value();
  if (!c.nelson) j["nelson_unavailable"] = c.nelson_unavailable;
  return j;
}

ojson comparison_to_json(const TheoryComparison& c) {
  ojson j;
  j["lags"] = c.qm.lags;
  j["qm"] = c.qm.values;
  j["bohm"] = c.bohm.values;
  if (c.nelson) j["nelson"] = c.nelson->values;
  j["summary"] = comparison_summary(c);
  return j;
}

ojson to_json(const std::vector<EpsilonRow>& rows) {
  ojson a = ojson::array();
  for (const auto& r : rows) {
    ojson row;
    row["epsilon"] = r.epsilon;
    row["value"] = r.value;
    row["stderr"] = r.stderr_value;
    row["spectral_ref"] = number_or_null(r.spectral_ref);
    row["abs_dev"] = number_or_null(r.abs_dev);
    a.push_back(std::move(row));
  }
  return ojson{{"rows", std::move(a)}};
}

std::vector<EpsilonRow> epsilon_rows_from_json(const json& j) {
  std::vector<EpsilonRow> rows;
  for (const auto& r : j.at("rows")) {
    rows.push_back({r.at("epsilon").get<double>(), r.at("value").get<double>(), r.at("stderr").get<double>(),
                    from_number_or_null(r.at("spectral_ref")), from_number_or_null(r.at("abs_dev"))});
  }
  return rows;
}

ojson to_json(const ChshReport& r) {
  ojson j;
  j["alpha"] = r.alpha;
  j["omega"] = r.omega;
  j["times"] = {{"t1", r.times.t1}, {"t2", r.times.t2}, {"s1", r.times.s1}, {"s2", r.times.s2}};
  j["correlations"] = matrix_json(r.correlations);
  j["marginals"] = r.marginals;
  j["S"] = r.S;
  j["classical_feasible"] = r.classical_feasible;
  if (r.violated) {
    ojson v;
    v["signs"] = r.violated->signs;
    v["value"] = r.violated->value;
    j["violated"] = std::move(v);
  } else {
    j["violated"] = nullptr;
  }
  return j;
}

ChshReport chsh_report_from_json(const json& j) {
  ChshReport r{};
  r.alpha = j.at("alpha").get<double>();
  r.omega = j.at("omega").get<double>();
  const auto& t = j.at("times");
  r.times = {t.at("t1").get<double>(), t.at("t2").get<double>(), t.at("s1").get<double>(), t.at("s2").get<double>()};
  r.correlations = j.at("correlations").get<Matrix2>();
  r.marginals = j.at("marginals").get<std::array<double, 4>>();
  r.S = j.at("S").get<double>();
  r.classical_feasible = j.at("classical_feasible").get<bool>();
  if (!j.at("violated").is_null()) {
    const auto& v = j.at("violated");
    r.violated = ChshInequality{v.at("signs").get<std::array<std::array<int, 2>, 2>>(), v.at("value").get<double>()};
  }
  return r;
}

ojson to_json(const EigenSystem& es) {
  ojson j;
  j["grid"] = {{"min", es.grid.x_min()}, {"max", es.grid.x_max()}, {"n", es.grid.size()}};
  j["energies"] = es.energies;
  ojson parities = ojson::array();
  for (const auto& f : es.eigenfunctions) parities.push_back(to_string(f.parity));
  j["parities"] = std::move(parities);
  ojson psi = ojson::array();
  for (const auto& f : es.eigenfunctions) psi.push_back(f.values);
  j["psi"] = std::move(psi);
  return j;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

}  // namespace nelcorr::cli

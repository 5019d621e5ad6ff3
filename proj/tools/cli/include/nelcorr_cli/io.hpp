#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nelcorr/bell.hpp"
#include "nelcorr/correlators.hpp"
#include "nelcorr/nelson_sde.hpp"
#include "nelcorr/spectral.hpp"

namespace nelcorr::cli {

using ojson = nlohmann::ordered_json;

// 17 significant digits, '.' separator, "nan"/"inf" spelled out.
std::string format_number(double x);

// Writes bytes as given (no newline translation).
void write_file(const std::string& path, const std::string& content);

// CSV tables, '\n' line endings.
std::string series_csv(const CorrelationSeries& s);  // lag,value,method or lag,estimate,stderr
std::string comparison_csv(const TheoryComparison& c);
std::string epsilon_csv(const std::vector<EpsilonRow>& rows);
std::string chsh_csv(const std::vector<ChshReport>& reports);
std::string eigen_csv(const EigenSystem& es);
// One path per line: cluster coordinates at every stored time, space separated.
std::string paths_dump(const Ensemble& e);

ojson to_json(const CorrelationSeries& s);
CorrelationSeries series_from_json(const nlohmann::json& j);

ojson to_json(const std::vector<TrigComponent>& components);

ojson comparison_summary(const TheoryComparison& c);
ojson comparison_to_json(const TheoryComparison& c);

ojson to_json(const std::vector<EpsilonRow>& rows);
std::vector<EpsilonRow> epsilon_rows_from_json(const nlohmann::json& j);

ojson to_json(const ChshReport& r);
ChshReport chsh_report_from_json(const nlohmann::json& j);

ojson to_json(const EigenSystem& es);

// Stable two-space indentation with a trailing newline.
std::string dump(const ojson& j);

}  // namespace nelcorr::cli

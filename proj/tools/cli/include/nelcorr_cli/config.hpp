#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nelcorr/bell.hpp"
#include "nelcorr/observable.hpp"
#include "nelcorr/spectral.hpp"
#include "nelcorr/states.hpp"

namespace nelcorr::cli {

// Malformed or incomplete configuration.  `where` is a field path such as
// "clusters[1].potential.omega" or "line 4, column 12".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct ClusterSpec {
  Potential potential;
  Grid grid;
  std::size_t levels;  // 0: enough for the state, at least 2
  bool numeric;  // finite-difference solve even when a closed form exists
};

struct McSpec {
  std::size_t n_paths = 100000;
  double dt = 1e-3;
  std::optional<std::uint64_t> seed;
  double epsilon = 1e-3;
  std::optional<double> horizon;
  std::vector<double> epsilons;
};

struct ChshSpec {
  std::size_t cluster = 0;
  std::optional<Observable> observable;
  std::optional<ChshTimes> times;
  std::vector<double> barrier_sweep;  // double-well barrier heights
};

enum class OutputFormat { csv, json };

struct RunConfig {
  std::vector<ClusterSpec> clusters;
  std::vector<Term> terms;
  std::optional<Observable> f;
  std::optional<Observable> g;
  std::vector<double> lags;
  McSpec mc;
  ChshSpec chsh;
  std::optional<OutputFormat> format;  // per-subcommand default when absent
  std::optional<std::string> output_path;
};

// Field checks only; nothing is solved here.  Blocks a subcommand does not use
// may be absent: required() reports the missing ones by name.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

enum class Need { state, observables, lags, mc_seed, epsilons };
void required(const RunConfig& config, std::initializer_list<Need> needs);

EigenSystem build_cluster(const ClusterSpec& spec);
CompositeState build_state(const RunConfig& config);

}  // namespace nelcorr::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "holonomy/paths.hpp"

namespace holonomy {

/// Result of one seeded experiment: named metrics, a verdict and per-sample CSV rows.
struct ExperimentReport {
  std::string name;
  std::uint64_t seed = 0;
  Json parameters = Json::object();
  std::vector<std::pair<std::string, double>> metrics;  // in insertion order
  std::vector<std::string> notes;
  bool pass = false;
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;

  void metric(const std::string& key, double value) { metrics.emplace_back(key, value); }
  /// Value of a metric; throws InvalidArgument if absent.
  double metric(const std::string& key) const;
  bool has_metric(const std::string& key) const;

  Json to_json() const;
  std::string to_csv() const;
  /// Writes {name}-{seed}.json and {name}-{seed}.csv into dir and returns the JSON path.
  std::filesystem::path write(const std::filesystem::path& dir) const;
};

/// Formats a double so that it reads back bit-exactly.
std::string format_number(double x);

struct ParamSpec {
  std::string name;
  Json fallback;
  std::string help;
};

struct ExperimentInfo {
  std::string name;
  std::string summary;
  std::vector<ParamSpec> params;
  std::string samples_param;  // parameter set by --samples (empty if none)
  std::function<ExperimentReport(const Json& params, std::uint64_t seed)> run;
};

/// All experiments, in CLI order.
const std::vector<ExperimentInfo>& experiment_registry();
const ExperimentInfo& find_experiment(const std::string& name);

/// Defaults overlaid with `overrides`. Unknown keys and values whose JSON type differs
/// from the default (integers accepted for reals) raise ConfigError naming the field.
Json resolve_params(const ExperimentInfo& info, const Json& overrides);

/// resolve_params followed by the driver.
ExperimentReport run_experiment(const std::string& name, const Json& overrides, std::uint64_t seed);

}  // namespace holonomy

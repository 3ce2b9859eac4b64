#pragma once

// Run configuration, the four commands behind the CLI, and report emission
// (JSON, CSV, markdown). Commands return the process exit code:
// 0 all pass, 2 at least one identity failure, 1 usage/config/IO error.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetlab/fock.hpp"

namespace hetlab {

inline constexpr const char* kToolVersion = "1.0.0";

enum class RunMode { Verify, Sweep, Converge, Classical };
enum class OutputFormat { Json, Csv, Markdown };

const char* to_string(RunMode m);
const char* to_string(OutputFormat f);
RunMode parse_mode(const std::string& s);
OutputFormat parse_format(const std::string& s);

struct ClassicalConfig {
  /// "constant", "linear" or "csv"
  std::string profile = "constant";
  double omega0 = 2.0;
  double c0 = 0.0;  // linear: Omega^2 = c0 + c1 t
  double c1 = 1.0;
  std::string profile_csv;
  double t0 = 0.0;
  double t1 = 1.0;
  double step = 1e-3;
  double gamma_re = 0.5;
  double gamma_im = 0.0;
  int coherent_d = 24;
  double coherent_t = 1.5707963267948966;
};

struct RunConfig {
  RunMode mode = RunMode::Verify;
  int d_a = 12;
  int d_b = 12;
  double A = 1.0;
  double B = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
  int margin = 2;
  ToleranceConfig tol;
  std::vector<double> k_grid{0.2, 0.1, 0.05, 0.02, 0.01, 0.005};
  std::vector<int> dims{8, 12, 16, 20};
  std::string out;  // empty: stdout
  OutputFormat format = OutputFormat::Json;
  std::uint64_t seed = 0;
  /// verify: number of randomized (A, B, alpha, beta) points run in addition
  int random_points = 0;
  /// verify: restrict to these case kinds (empty: all)
  std::vector<std::string> only;
  /// verify/converge: restrict to these case ids (empty: all, or the
  /// default convergence set)
  std::vector<std::string> cases;
  ClassicalConfig classical;

  /// Throws DomainError on an invalid combination.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  /// Fields absent from `j` keep their defaults; unknown fields are rejected.
  static RunConfig from_json(const nlohmann::json& j, RunConfig base);
  static RunConfig from_json(const nlohmann::json& j) { return from_json(j, RunConfig{}); }
};

/// Config file loader; throws Error on IO or parse failure.
RunConfig load_config(const std::string& path, RunConfig base = {});

struct RunSummary {
  int total = 0;
  int pass = 0;
  int fail = 0;
  int skip = 0;
  int report_only = 0;
  /// max residual per case kind, over cases that produced one
  std::vector<std::pair<std::string, double>> max_residual;
};

/// Deviation notes that travel with every markdown report.
const std::vector<std::pair<std::string, std::string>>& deviation_notes();

/// Each command renders its report into `rendered` and writes it to
/// config.out (or `stdout_stream` when out is empty). Diagnostics go to
/// `diag`.
int cmd_verify(const RunConfig& config, std::ostream& stdout_stream, std::ostream& diag);
int cmd_sweep(const RunConfig& config, std::ostream& stdout_stream, std::ostream& diag);
int cmd_converge(const RunConfig& config, std::ostream& stdout_stream, std::ostream& diag);
int cmd_classical(const RunConfig& config, std::ostream& stdout_stream, std::ostream& diag);

/// Dispatch on config.mode.
int run(const RunConfig& config, std::ostream& stdout_stream, std::ostream& diag);

/// Matrix-function and exact cases: the default convergence set.
std::vector<std::string> default_convergence_ids();

}  // namespace hetlab

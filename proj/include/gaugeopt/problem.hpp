#pragma once

// Problem documents (JSON), presets and the run / verify / sweep pipelines
// behind the command-line tool.

#include "gaugeopt/analyze.hpp"
#include "gaugeopt/optimize.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gaugeopt {

using Json = nlohmann::ordered_json;

/// Validation failure; every issue is "path: message".
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// A box bound: a constant gauge value or one sample per grid node.
struct BoundSpec {
  std::optional<double> constant;
  std::vector<double> samples;
  PeriodicField field(int n) const;
};

struct InitSpec {
  enum class Kind { Constant, Fourier, Csv };
  Kind kind = Kind::Constant;
  double value = 1.0;                            // Constant, and the mean for Fourier
  std::vector<std::pair<int, double>> cos_modes;
  std::vector<std::pair<int, double>> sin_modes;
  std::string path;                              // Csv, relative to the document
};

struct AnalysisSpec {
  bool classify = true;
  bool refine = true;        // re-solve at 2N for the stability check
  int check_directions = 5;  // 0 skips the derivative digest
  std::uint64_t seed = 1;
  bool report_mu_sign = false;
};

struct OutputSpec {
  std::string dir = ".";
  std::string report = "report.json";
  std::string history = "history.csv";
  std::string svg = "shape.svg";
  std::string gauge = "gauge.csv";
  std::string mesh = "mesh.off";
  std::string timings = "timings.json";
};

struct ProblemDocument {
  std::string name = "problem";
  FunctionalSpec objective;
  std::optional<BoundSpec> lower, upper;
  std::optional<EqualityConstraint> equality;
  int n = 128;
  OptimizerConfig optimizer;
  InitSpec init;
  AnalysisSpec analysis;
  OutputSpec outputs;

  ConstraintSpec constraints(int grid) const;
};

/// Throws SchemaError listing every problem found.
ProblemDocument parse_problem(const Json& doc);

/// Reads and parses a file; JSON syntax errors are reported with line and column.
ProblemDocument load_problem(const std::filesystem::path& path);

/// Fully resolved document, defaults materialized.
Json to_json(const ProblemDocument& doc);

PeriodicField initial_gauge(const ProblemDocument& doc, const std::filesystem::path& base_dir);

const std::vector<std::string>& preset_names();
/// Throws std::invalid_argument for unknown names.
ProblemDocument preset(const std::string& name);

enum ExitCode { kExitOk = 0, kExitSchema = 2, kExitNotConverged = 3, kExitInfeasible = 4 };

struct RunOutcome {
  Json report;   // deterministic: no timings
  Json timings;
  int exit_code = kExitOk;
  std::optional<OptimizationResult> result;   // at N
  std::optional<OptimizationResult> refined;  // at 2N
  std::optional<RegularityVerdict> verdict;
};

/// minimize, recover multipliers, refine at 2N, classify and check
/// derivatives. Writes the outputs when `write_outputs` is set.
RunOutcome run_problem(const ProblemDocument& doc, const std::filesystem::path& base_dir, bool write_outputs = true);

/// Derivative checks at the initial gauge.
Json verify_problem(const ProblemDocument& doc, const std::filesystem::path& base_dir);

Json verdict_json(const RegularityVerdict& v);

/// Sets a dotted path ("optimizer.tol_kkt", "objective.terms.1.coefficient")
/// in a document, creating object members as needed.
void set_path(Json& doc, const std::string& dotted, const Json& value);

struct SweepItem {
  std::string value;
  int exit_code = 0;
  Json summary;
};

/// One run per value, each in its own output subdirectory, spread over a
/// pool of `workers` threads (0 picks the hardware concurrency).
std::vector<SweepItem> sweep(const Json& base_doc, const std::string& param, const std::vector<std::string>& values,
                             const std::filesystem::path& base_dir, int workers = 0);

}  // namespace gaugeopt

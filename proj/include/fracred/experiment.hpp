#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fracred/mesh.hpp"
#include "fracred/operator.hpp"

namespace fracred {

/// The configuration does not match the schema.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Coefficients of one operator. Values apply on Omega; outside Omega every
/// operator is the Laplacian. `*_file` entries name headerless CSVs with rows
/// "element,entries..." (A row-major) that must respect that support.
struct OperatorSpec {
  std::optional<Mat2> A;
  std::optional<std::filesystem::path> A_file;
  std::optional<Vec2> b;
  std::optional<std::filesystem::path> b_file;
  double c = 0.0;
  std::optional<std::filesystem::path> c_file;
  std::optional<double> ellipticity;
};

struct DiffeoSpec {
  enum class Kind { RadialShrink, NodalFile } kind = Kind::RadialShrink;
  double rho = 0.0;
  double factor = 1.0;
  std::filesystem::path path;
};

struct ExperimentConfig {
  int dim = 1;
  Box box;
  int nx = 0;
  int ny = 0;
  Box omega, w, wtilde;
  std::optional<Box> e;
  std::vector<OperatorSpec> operators;
  std::vector<double> a;
  double s_max = 4.0;
  int quad_n = 200;
  std::optional<DiffeoSpec> diffeo;
  std::vector<std::string> suites;
  std::uint64_t seed = 42;
  std::filesystem::path out = "fracred-out";
  /// Heat-kernel time for the diagnostics suite.
  double heat_t = 0.1;
};

/// Parses and validates a configuration. Relative file paths are resolved
/// against `base_dir`. Throws SchemaError on any violation, including
/// unknown keys.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

struct SuiteInfo {
  const char* name;
  const char* description;
};

/// Every suite in execution order.
const std::vector<SuiteInfo>& list_suites();
std::string list_suites_text();

struct RunOptions {
  std::optional<std::filesystem::path> out;
  std::optional<std::vector<std::string>> suites;
  std::optional<std::uint64_t> seed;
};

enum ExitCode : int { kExitOk = 0, kExitContract = 1, kExitSchema = 2, kExitIo = 3 };

/// Runs the configured suites and writes their results to the output
/// directory. Returns an ExitCode; on failure a failure.json manifest is
/// written when the output directory is known.
int run_experiment(const std::filesystem::path& config_path, const RunOptions& options,
                   std::ostream& log);

}  // namespace fracred

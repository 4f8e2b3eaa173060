#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "vbdecoh/bath.hpp"
#include "vbdecoh/errors.hpp"
#include "vbdecoh/sweep.hpp"

namespace vbdecoh::app {

struct OracleCheckSpec {
  int spins = 4;            ///< strongest bath spins handed to the oracle
  double t_max = 1.0;       ///< us
  int points = 201;
  double tolerance = 1e-8;  ///< max |Delta|L|| allowed at full order
  long max_dim = kDefaultMaxDim;
};

struct OutputSpec {
  bool curves = true;
  bool spectra = false;
  bool bath_snapshot = true;
};

/// Fully parsed and validated run configuration.
struct RunConfig {
  LatticeSpec lattice;
  IsotopeConfig isotopes;
  std::string dataset = "synthetic";  ///< CSV path, or "synthetic"
  std::string bath_file;              ///< optional bath snapshot; replaces lattice + dataset
  RunSettings base;
  std::optional<SweepSpec> sweep;
  std::optional<ConvergencePlan> convergence;
  std::vector<Ablation> ablations;
  OracleCheckSpec oracle;
  OutputSpec outputs;
  std::string output_dir = "vbdecoh-out";
  std::uint64_t seed = 1;
  std::filesystem::path base_dir;  ///< relative paths resolve against this

  /// Canonical JSON of every setting that can change a numeric result.
  nlohmann::json physics;
};

/// Aggregated schema problems; `what()` lists every one of them.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

inline const std::vector<std::string> kPresets = {"table-1", "figure-2a", "figure-3a", "figure-4", "figure-5"};

/// Preset document; user documents are merge-patched on top of it.
nlohmann::json preset_document(const std::string& name);

/// Parses a configuration document. Unknown keys and bad values are collected
/// and thrown together as ConfigError.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// Reads a JSON file; a preset (if given) is the base document.
nlohmann::json load_document(const std::optional<std::filesystem::path>& path, const std::optional<std::string>& preset);

/// Hex SHA-256 of the canonical physics JSON.
std::string config_hash(const RunConfig& cfg);

/// Bath described by the config (snapshot, dataset CSV or synthetic model).
std::vector<BathSpin> build_bath(const RunConfig& cfg);

/// Output directory after applying the environment override.
std::filesystem::path resolve_output_dir(const RunConfig& cfg, const std::optional<std::string>& flag);

/// Thread count: flag, then environment, then config, then hardware.
int resolve_threads(const RunConfig& cfg, std::optional<int> flag);

inline constexpr const char* kOutputDirEnv = "VBDECOH_OUTPUT_DIR";
inline constexpr const char* kThreadsEnv = "VBDECOH_THREADS";

}  // namespace vbdecoh::app

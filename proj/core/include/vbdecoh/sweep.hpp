#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vbdecoh/cce.hpp"
#include "vbdecoh/eseem.hpp"

namespace vbdecoh {

/// Initial polarization of the `shell_size` most strongly coupled spins;
/// every other spin starts maximally mixed.
struct PolarizationSpec {
  double p = 0.0;
  Vec3 axis = Vec3(0.0, 0.0, -1.0);
  int shell_size = 3;

  void validate() const;
  /// Bath state for a bath sorted by coupling strength.
  BathState bath_state(std::size_t bath_size) const;
};

struct TimeGridSpec {
  double t_max = 0.0;      ///< us; 0 picks the window from a pilot run
  int points = 501;
  double span_factor = 6.0;  ///< window = span_factor * pilot T2
  int pilot_points = 121;
  std::size_t pilot_cap = 300;  ///< clusters per order in the pilot run

  void validate() const;
};

/// Everything that defines one simulated point apart from the bath.
struct RunSettings {
  CentralSpinParams central;
  double B_z = 0.0;  ///< mT, along c
  HamiltonianMode mode = HamiltonianMode::full;
  ClusterPolicy policy;
  PolarizationSpec polarization;
  TimeGridSpec grid;
  bool spectrum = false;
  SpectrumOptions spectrum_options;
  int threads = 1;

  void validate() const;
};

/// Region of the field axis used to label sweep rows.
std::string region_label(double B_z, const CentralSpinParams& central);

/// Rough T2 expectation used to size the pilot window, us.
double expected_t2(double B_z, const CentralSpinParams& central);

/// |L| above this marks a diverged truncated expansion.
inline constexpr double kDivergenceBound = 1.5;

struct PointResult {
  double value = 0.0;  ///< sweep coordinate
  bool ok = false;
  std::string error;
  std::string region;
  FitResult fit;
  GcceResult gcce;
  std::vector<FitResult> order_fits;  ///< fit of each cumulative order
  /// Highest cumulative order whose curve stays below kDivergenceBound; `fit`
  /// and `spectrum` come from it.
  int fit_order = 0;
  std::optional<Spectrum> spectrum;
  double pilot_t2 = 0.0;
};

/// Time grid for a point: explicit, or scaled from a cheap pilot expansion.
std::vector<double> choose_time_grid(std::span<const BathSpin> bath, const RunSettings& settings, double* pilot_t2 = nullptr);

/// Runs one point; failures are thrown.
PointResult run_point(std::span<const BathSpin> bath, const RunSettings& settings);

enum class SweepAxis { B_z, E, polarization };
std::string_view to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(std::string_view s);

struct SweepSpec {
  SweepAxis axis = SweepAxis::B_z;
  std::vector<double> points;
  /// Policy overrides for individual points, matched by index.
  std::vector<std::optional<ClusterPolicy>> policy_overrides;

  void validate() const;
};

/// Default field grid: log-spaced 1-3000 mT plus a linear refinement around the crossing.
std::vector<double> default_field_grid(const CentralSpinParams& central, int log_points = 24, int refine_points = 9);

struct SweepTable {
  SweepAxis axis = SweepAxis::B_z;
  std::vector<PointResult> rows;

  std::size_t failures() const;
};

/// Independent points run on a bounded pool; remaining threads go to the
/// cluster evaluations of each point. Rows keep the order of `spec.points`.
SweepTable run_sweep(const SweepSpec& spec, std::span<const BathSpin> bath, const RunSettings& base);

/// Applies a sweep coordinate to the base settings.
RunSettings settings_at(const SweepSpec& spec, std::size_t index, const RunSettings& base);

struct ConvergenceEntry {
  std::string knob;  ///< "order", "r_bath" or "cap"
  double setting = 0.0;
  FitResult fit;
  double degraded_fraction = 0.0;
  double delta = 0.0;  ///< |T2 - previous T2| / previous T2, 0 for the first setting
  bool flagged = false;
};

struct ConvergenceReport {
  double B_z = 0.0;
  std::vector<ConvergenceEntry> entries;
  bool converged() const;
};

struct ConvergencePlan {
  std::vector<int> orders;
  std::vector<double> radii;
  std::vector<std::size_t> caps;
  double tolerance = 0.10;

  void validate() const;
};

/// Fitted T2 against expansion order, bath radius and cluster cap, each varied
/// on its own from the base settings.
ConvergenceReport convergence_study(std::span<const BathSpin> bath, const RunSettings& base, const ConvergencePlan& plan);

enum class Ablation { none, nitrogen_only, boron_only, drop_first_shell };
std::string_view to_string(Ablation a);
Ablation ablation_from_string(std::string_view s);

/// Indices of the spins kept by an ablation. The first shell is the group of
/// strongest couplings sharing one hyperfine norm.
std::vector<std::size_t> ablation_indices(std::span<const BathSpin> bath, Ablation variant);

struct AblationResult {
  Ablation variant = Ablation::none;
  std::vector<BathSpin> bath;
  PointResult point;
};

/// Runs `settings` on the ablated bath. Polarization refers to the strongest
/// spins of the original bath and follows them through the ablation.
AblationResult ablate_bath(std::span<const BathSpin> bath, Ablation variant, const RunSettings& settings);

}  // namespace vbdecoh

#include "vbdecoh/sweep.hpp"

#include <algorithm>
#include <cmath>

#include "vbdecoh/bath.hpp"
#include "vbdecoh/errors.hpp"
#include "vbdecoh/parallel.hpp"

namespace vbdecoh {

void PolarizationSpec::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("polarization p must lie in [0, 1]");
  if (!axis.allFinite() || axis.norm() < 1e-12) throw ValidationError("polarization axis must be a nonzero vector");
  if (shell_size < 0) throw ValidationError("polarization shell_size must be non-negative");
}

BathState PolarizationSpec::bath_state(std::size_t bath_size) const {
  BathState state;
  if (p == 0.0) return state;
  const std::size_t n = std::min<std::size_t>(bath_size, static_cast<std::size_t>(shell_size));
  for (std::size_t i = 0; i < n; ++i) state.overrides[i] = SpinInitialState::polarized(p, axis);
  return state;
}

void TimeGridSpec::validate() const {
  if (t_max < 0.0 || !std::isfinite(t_max)) throw ValidationError("t_max must be >= 0 (0 selects a pilot-scaled window)");
  if (points < 20) throw ValidationError("time grid needs at least 20 points");
  if (!(span_factor > 0.0)) throw ValidationError("span_factor must be positive");
  if (pilot_points < 20) throw ValidationError("pilot_points must be at least 20");
}

void RunSettings::validate() const {
  central.validate();
  policy.validate();
  polarization.validate();
  grid.validate();
  if (!std::isfinite(B_z)) throw ValidationError("B_z must be finite");
  if (threads < 1) throw ValidationError("threads must be >= 1");
}

std::string region_label(double B_z, const CentralSpinParams& central) {
  const double b = std::abs(B_z);
  const double gslac = gslac_field(central);
  if (b < 10.0) return "zero-field";
  if ((b >= 100.0 && b < 180.0) || std::abs(b - gslac) <= 30.0) return "gslac";
  if (b < 100.0) return "low-field";
  if (b < 350.0) return "transition";
  return "high-field";
}

double expected_t2(double B_z, const CentralSpinParams& central) {
  const auto region = region_label(B_z, central);
  if (region == "gslac") return 0.03;
  if (region == "transition") return 2.0;
  if (region == "high-field") return 30.0;
  return 0.2;
}

namespace {

SystemInputs make_system(std::span<const BathSpin> bath, const RunSettings& s, const BathState& state) {
  SystemInputs sys;
  sys.central = s.central;
  sys.bath = bath;
  sys.field = MagneticField::along_c(s.B_z);
  sys.mode = s.mode;
  sys.bath_state = state;
  sys.r_pair = s.policy.r_pair;
  sys.max_dim = s.policy.max_dim;
  return sys;
}

int grid_points(const RunSettings& s, double t_max) {
  int points = s.grid.points;
  if (s.spectrum) {
    const double needed = std::ceil(2.0 * s.spectrum_options.min_nyquist * t_max * 1.05) + 1.0;
    points = std::max(points, static_cast<int>(needed));
  }
  return points;
}

std::vector<double> grid_for(std::span<const BathSpin> bath, const RunSettings& s, const BathState& state,
                             double* pilot_t2) {
  if (s.grid.t_max > 0.0) return uniform_times(s.grid.t_max, grid_points(s, s.grid.t_max));
  ClusterPolicy pilot = s.policy;
  pilot.max_order = std::min(pilot.max_order, 2);
  pilot.max_clusters_per_order = s.grid.pilot_cap;
  pilot.bath_samples = std::min(pilot.bath_samples, 2);
  const SystemInputs sys = make_system(bath, s, state);
  double window = 8.0 * expected_t2(s.B_z, s.central);
  double t2 = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    const auto times = uniform_times(window, s.grid.pilot_points);
    const auto r = gcce_coherence(sys, pilot, times, GcceOptions{s.threads, false});
    const auto fit = fit_decay(r.total);
    if (fit.resolved && fit.T2 < window) {
      t2 = fit.T2;
      break;
    }
    window *= 4.0;
  }
  if (pilot_t2) *pilot_t2 = t2;
  const double t_max = t2 > 0.0 ? s.grid.span_factor * t2 : window;
  return uniform_times(t_max, grid_points(s, t_max));
}

PointResult run_with_state(std::span<const BathSpin> bath, const RunSettings& s, const BathState& state) {
  s.validate();
  PointResult out;
  out.region = region_label(s.B_z, s.central);
  const auto times = grid_for(bath, s, state, &out.pilot_t2);
  const SystemInputs sys = make_system(bath, s, state);
  out.gcce = gcce_coherence(sys, s.policy, times, GcceOptions{s.threads, false});
  for (const auto& c : out.gcce.cumulative) out.order_fits.push_back(fit_decay(c));
  out.fit_order = 1;
  for (std::size_t n = 1; n < out.gcce.cumulative.size(); ++n) {
    const auto mag = out.gcce.cumulative[n].magnitude();
    if (*std::max_element(mag.begin(), mag.end()) > kDivergenceBound) break;
    out.fit_order = static_cast<int>(n) + 1;
  }
  out.fit = out.order_fits[out.fit_order - 1];
  if (s.spectrum) {
    // Only the coherent part of the curve carries the modulation; the tail is dominated by slow leftovers.
    SpectrumOptions opts = s.spectrum_options;
    if (opts.window == 0.0 && out.fit.resolved) opts.window = out.fit.T2;
    out.spectrum = modulation_spectrum(out.gcce.cumulative[out.fit_order - 1], opts);
  }
  out.ok = true;
  return out;
}

}  // namespace

std::vector<double> choose_time_grid(std::span<const BathSpin> bath, const RunSettings& settings, double* pilot_t2) {
  settings.validate();
  return grid_for(bath, settings, settings.polarization.bath_state(bath.size()), pilot_t2);
}

PointResult run_point(std::span<const BathSpin> bath, const RunSettings& settings) {
  settings.polarization.validate();
  auto out = run_with_state(bath, settings, settings.polarization.bath_state(bath.size()));
  out.value = settings.B_z;
  return out;
}

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::B_z: return "B_z";
    case SweepAxis::E: return "E";
    case SweepAxis::polarization: return "polarization";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(std::string_view s) {
  if (s == "B_z") return SweepAxis::B_z;
  if (s == "E") return SweepAxis::E;
  if (s == "polarization") return SweepAxis::polarization;
  throw ValidationError("unknown sweep axis '" + std::string(s) + "' (expected B_z, E or polarization)");
}

void SweepSpec::validate() const {
  for (double v : points)
    if (!std::isfinite(v)) throw ValidationError("sweep points must be finite");
  if (policy_overrides.size() > points.size()) throw ValidationError("more policy overrides than sweep points");
  for (const auto& o : policy_overrides)
    if (o) o->validate();
  if (axis == SweepAxis::E)
    for (double v : points)
      if (v < 0.0) throw ValidationError("E sweep points must be >= 0");
  if (axis == SweepAxis::polarization)
    for (double v : points)
      if (v < 0.0 || v > 1.0) throw ValidationError("polarization sweep points must lie in [0, 1]");
}

std::vector<double> default_field_grid(const CentralSpinParams& central, int log_points, int refine_points) {
  std::vector<double> grid;
  for (int k = 0; k < log_points; ++k) grid.push_back(std::pow(10.0, 0.0 + std::log10(3000.0) * k / (log_points - 1)));
  const double g = gslac_field(central);
  for (int k = 0; k < refine_points; ++k) grid.push_back(g - 30.0 + 60.0 * k / std::max(1, refine_points - 1));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }), grid.end());
  return grid;
}

std::size_t SweepTable::failures() const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.ok; }));
}

RunSettings settings_at(const SweepSpec& spec, std::size_t index, const RunSettings& base) {
  RunSettings s = base;
  const double v = spec.points.at(index);
  switch (spec.axis) {
    case SweepAxis::B_z: s.B_z = v; break;
    case SweepAxis::E: s.central.E = v; break;
    case SweepAxis::polarization: s.polarization.p = v; break;
  }
  if (index < spec.policy_overrides.size() && spec.policy_overrides[index]) s.policy = *spec.policy_overrides[index];
  return s;
}

SweepTable run_sweep(const SweepSpec& spec, std::span<const BathSpin> bath, const RunSettings& base) {
  spec.validate();
  SweepTable table;
  table.axis = spec.axis;
  table.rows.resize(spec.points.size());
  if (spec.points.empty()) return table;
  const int outer = static_cast<int>(std::min<std::size_t>(spec.points.size(), static_cast<std::size_t>(std::max(1, base.threads))));
  const int inner = std::max(1, base.threads / outer);
  parallel_for(spec.points.size(), outer, [&](std::size_t i) {
    RunSettings s = settings_at(spec, i, base);
    s.threads = inner;
    auto& row = table.rows[i];
    try {
      row = run_point(bath, s);
    } catch (const std::exception& e) {
      row = PointResult{};
      row.ok = false;
      row.error = e.what();
    }
    row.value = spec.points[i];
    if (row.region.empty()) {
      try {
        row.region = region_label(s.B_z, s.central);
      } catch (const std::exception&) {
        row.region = "unknown";
      }
    }
  });
  return table;
}

bool ConvergenceReport::converged() const {
  return std::none_of(entries.begin(), entries.end(), [](const auto& e) { return e.flagged; });
}

void ConvergencePlan::validate() const {
  if (orders.empty() && radii.empty() && caps.empty()) throw ValidationError("convergence plan varies no knob");
  auto check = [](std::size_t n, const char* name) {
    if (n == 1) throw ValidationError(std::string("convergence knob '") + name + "' needs at least 2 settings");
  };
  check(orders.size(), "order");
  check(radii.size(), "r_bath");
  check(caps.size(), "cap");
  for (int o : orders)
    if (o < 1 || o > 4) throw ValidationError("convergence orders must lie in 1..4");
  if (!(tolerance > 0.0)) throw ValidationError("convergence tolerance must be positive");
}

namespace {

void mark_deltas(std::vector<ConvergenceEntry>& entries, std::size_t first, double tolerance) {
  for (std::size_t k = first + 1; k < entries.size(); ++k) {
    const auto& prev = entries[k - 1].fit;
    const auto& cur = entries[k].fit;
    if (prev.resolved && cur.resolved) {
      entries[k].delta = std::abs(cur.T2 - prev.T2) / prev.T2;
      entries[k].flagged = entries[k].delta > tolerance;
    } else {
      entries[k].flagged = prev.resolved != cur.resolved;
    }
  }
}

}  // namespace

ConvergenceReport convergence_study(std::span<const BathSpin> bath, const RunSettings& base, const ConvergencePlan& plan) {
  plan.validate();
  base.validate();
  ConvergenceReport report;
  report.B_z = base.B_z;
  const BathState state = base.polarization.bath_state(bath.size());
  const auto times = grid_for(bath, base, state, nullptr);
  const SystemInputs sys = make_system(bath, base, state);
  const GcceOptions opts{base.threads, false};

  if (!plan.orders.empty()) {
    ClusterPolicy policy = base.policy;
    policy.max_order = *std::max_element(plan.orders.begin(), plan.orders.end());
    const auto r = gcce_coherence(sys, policy, times, opts);
    const std::size_t first = report.entries.size();
    for (int o : plan.orders)
      report.entries.push_back({"order", double(o), fit_decay(r.cumulative[o - 1]), r.degraded_fraction, 0.0, false});
    mark_deltas(report.entries, first, plan.tolerance);
  }
  auto vary = [&](const char* knob, auto values, auto apply) {
    const std::size_t first = report.entries.size();
    for (auto v : values) {
      ClusterPolicy policy = base.policy;
      apply(policy, v);
      const auto r = gcce_coherence(sys, policy, times, opts);
      report.entries.push_back({knob, double(v), fit_decay(r.total), r.degraded_fraction, 0.0, false});
    }
    mark_deltas(report.entries, first, plan.tolerance);
  };
  if (!plan.radii.empty()) vary("r_bath", plan.radii, [](ClusterPolicy& p, double v) { p.r_bath = v; });
  if (!plan.caps.empty()) vary("cap", plan.caps, [](ClusterPolicy& p, std::size_t v) { p.max_clusters_per_order = v; });
  return report;
}

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::none: return "none";
    case Ablation::nitrogen_only: return "nitrogen_only";
    case Ablation::boron_only: return "boron_only";
    case Ablation::drop_first_shell: return "drop_first_shell";
  }
  return "?";
}

Ablation ablation_from_string(std::string_view s) {
  if (s == "none") return Ablation::none;
  if (s == "nitrogen_only") return Ablation::nitrogen_only;
  if (s == "boron_only") return Ablation::boron_only;
  if (s == "drop_first_shell") return Ablation::drop_first_shell;
  throw ValidationError("unknown ablation '" + std::string(s) + "'");
}

std::vector<std::size_t> ablation_indices(std::span<const BathSpin> bath, Ablation variant) {
  std::vector<std::size_t> keep;
  std::size_t skip = 0;
  if (variant == Ablation::drop_first_shell) {
    const auto shells = hyperfine_shells(bath);
    if (shells.empty()) throw ValidationError("drop_first_shell needs a nonempty bath");
    skip = static_cast<std::size_t>(shells.front().multiplicity);
  }
  for (std::size_t i = skip; i < bath.size(); ++i) {
    const Element e = species::element_of(bath[i].species);
    if (variant == Ablation::nitrogen_only && e != Element::nitrogen) continue;
    if (variant == Ablation::boron_only && e != Element::boron) continue;
    keep.push_back(i);
  }
  return keep;
}

AblationResult ablate_bath(std::span<const BathSpin> bath, Ablation variant, const RunSettings& settings) {
  settings.polarization.validate();
  AblationResult out;
  out.variant = variant;
  const auto keep = ablation_indices(bath, variant);
  const BathState original = settings.polarization.bath_state(bath.size());
  BathState state;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.bath.push_back(bath[keep[k]]);
    auto it = original.overrides.find(keep[k]);
    if (it != original.overrides.end()) state.overrides[k] = it->second;
  }
  out.point = run_with_state(out.bath, settings, state);
  out.point.value = settings.B_z;
  return out;
}

}  // namespace vbdecoh

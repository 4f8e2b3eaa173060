#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>

#include "config.hpp"
#include "vbdecoh/bath_io.hpp"
#include "vbdecoh/oracle.hpp"

namespace vbdecoh::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Loaded {
  RunConfig cfg;
  std::string hash;
};

Loaded load(const CommandOptions& opts) {
  const auto doc = load_document(opts.config, opts.preset);
  const fs::path base = opts.config ? opts.config->parent_path() : fs::path{};
  Loaded l{parse_config(doc, base), {}};
  l.cfg.base.threads = resolve_threads(l.cfg, opts.threads);
  l.hash = config_hash(l.cfg);
  return l;
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) { open_out(path) << j.dump(2) << '\n'; }

void write_curves(const fs::path& path, const std::string& hash, const GcceResult& r) {
  auto out = open_out(path);
  out << "# config_hash=" << hash << '\n' << "t_us";
  for (std::size_t n = 1; n <= r.order_factors.size(); ++n)
    out << ",L" << n << "_re,L" << n << "_im,L" << n << "_abs";
  for (std::size_t n = 1; n <= r.cumulative.size(); ++n)
    out << ",gcce" << n << "_re,gcce" << n << "_im,gcce" << n << "_abs";
  out << ",total_re,total_im,total_abs\n";
  auto cell = [&](const CoherenceCurve& c, std::size_t k) {
    out << ',' << num(c.values[k].real()) << ',' << num(c.values[k].imag()) << ',' << num(std::abs(c.values[k]));
  };
  for (std::size_t k = 0; k < r.total.size(); ++k) {
    out << num(r.total.times[k]);
    for (const auto& c : r.order_factors) cell(c, k);
    for (const auto& c : r.cumulative) cell(c, k);
    cell(r.total, k);
    out << '\n';
  }
}

json fit_json(const FitResult& f) {
  return {{"resolved", f.resolved},         {"T2_us", f.T2},          {"stretch_n", f.stretch_n},
          {"amplitude", f.amplitude},       {"residual_rms", f.residual_rms},
          {"used_envelope", f.used_envelope}, {"points_used", f.points_used}};
}

json census_json(const GcceResult& r) {
  return {{"enumerated", r.census.enumerated},
          {"evaluated", r.census.evaluated},
          {"degraded", r.census.degraded},
          {"degraded_fraction", r.degraded_fraction}};
}

std::string point_id(const std::string& hash, const std::string& kind, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return hash.substr(0, 12) + "-" + kind + buf;
}

struct Tally {
  std::size_t jobs = 0;
  std::size_t failed = 0;
  void add(bool ok) {
    ++jobs;
    if (!ok) ++failed;
  }
  int exit_code() const {
    if (jobs == 0 || failed == 0) return kSuccess;
    return failed == jobs ? kTotalFailure : kPartialFailure;
  }
};

void describe_bath(std::ostream& out, std::span<const BathSpin> bath) {
  std::size_t borons = 0;
  for (const auto& s : bath)
    if (species::element_of(s.species) == Element::boron) ++borons;
  out << "bath: " << bath.size() << " spins (" << borons << " B, " << bath.size() - borons << " N)";
  const auto shells = hyperfine_shells(bath);
  if (!shells.empty())
    out << ", strongest shell " << shells.front().multiplicity << "x " << to_string(shells.front().element) << " at "
        << num(shells.front().norm) << " MHz";
  out << '\n';
}

}  // namespace

int cmd_validate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    const auto l = load(opts);
    const auto bath = build_bath(l.cfg);
    out << "OK\n";
    describe_bath(out, bath);
    if (l.cfg.sweep)
      out << "sweep: " << l.cfg.sweep->points.size() << " points along " << to_string(l.cfg.sweep->axis) << '\n';
    else
      out << "single point at B_z = " << num(l.cfg.base.B_z) << " mT\n";
    out << "config_hash: " << l.hash << '\n';
    return kSuccess;
  } catch (const std::exception& e) {
    err << "validation failed: " << e.what() << '\n';
    return kValidationFailure;
  }
}

int cmd_run(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Loaded l;
  std::vector<BathSpin> bath;
  fs::path dir;
  try {
    l = load(opts);
    bath = build_bath(l.cfg);
    dir = resolve_output_dir(l.cfg, opts.output_dir);
  } catch (const std::exception& e) {
    err << "validation failed: " << e.what() << '\n';
    return kValidationFailure;
  }
  const auto& cfg = l.cfg;
  const auto& hash = l.hash;
  Tally tally;
  try {
    json prov = {{"config_hash", hash},
                 {"constants_version", std::string(PhysicalConstants::version)},
                 {"seed", cfg.seed},
                 {"library_version", VBDECOH_VERSION},
                 {"threads", cfg.base.threads},
                 {"preset", opts.preset ? json(*opts.preset) : json(nullptr)},
                 {"bath_size", bath.size()},
                 {"config", cfg.physics}};
    write_json(dir / "provenance.json", prov);
    if (cfg.outputs.bath_snapshot) write_json(dir / "bath.json", {{"config_hash", hash}, {"bath", bath_to_json(bath)}});
    describe_bath(out, bath);

    SweepSpec spec;
    if (cfg.sweep) {
      spec = *cfg.sweep;
    } else {
      spec.axis = SweepAxis::B_z;
      spec.points = {cfg.base.B_z};
    }
    if (spec.points.empty()) err << "warning: sweep has no points; nothing to run\n";

    const auto table = run_sweep(spec, bath, cfg.base);
    {
      auto csv = open_out(dir / "sweep.csv");
      csv << "# config_hash=" << hash << '\n';
      csv << "point,T2_us,stretch_n,region,degraded_fraction,fit_order,resolved,status\n";
      for (const auto& row : table.rows) {
        tally.add(row.ok);
        csv << num(row.value) << ',' << (row.fit.resolved ? num(row.fit.T2) : "") << ','
            << (row.fit.resolved ? num(row.fit.stretch_n) : "") << ',' << row.region << ','
            << num(row.gcce.degraded_fraction) << ',' << row.fit_order << ',' << (row.fit.resolved ? 1 : 0) << ','
            << (row.ok ? "ok" : "failed") << '\n';
      }
    }
    json fits = json::array(), census = json::array(), spectra = json::array(), failures = json::array();
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const auto& row = table.rows[i];
      const auto id = point_id(hash, "p", i);
      if (!row.ok) {
        failures.push_back({{"run_id", id}, {"point", row.value}, {"error", row.error}});
        err << "point " << num(row.value) << " failed: " << row.error << '\n';
        continue;
      }
      json orders = json::array();
      for (const auto& f : row.order_fits) orders.push_back(fit_json(f));
      fits.push_back({{"run_id", id}, {"point", row.value}, {"region", row.region}, {"pilot_T2_us", row.pilot_t2},
                      {"fit", fit_json(row.fit)}, {"fit_order", row.fit_order}, {"orders", orders}});
      census.push_back({{"run_id", id}, {"point", row.value}, {"census", census_json(row.gcce)}});
      if (row.spectrum) {
        json peaks = json::array();
        for (const auto& p : row.spectrum->peaks) peaks.push_back({{"frequency_MHz", p.frequency}, {"weight", p.weight}});
        spectra.push_back({{"run_id", id}, {"point", row.value}, {"peaks", peaks}});
      }
      if (cfg.outputs.curves) write_curves(dir / "curves" / (id.substr(13) + ".csv"), hash, row.gcce);
      out << to_string(spec.axis) << " = " << num(row.value) << ": "
          << (row.fit.resolved ? "T2 = " + num(row.fit.T2) + " us" : std::string("no decay resolved")) << " ["
          << row.region << "]\n";
    }
    const json axis = std::string(to_string(spec.axis));
    write_json(dir / "fits.json", {{"config_hash", hash}, {"axis", axis}, {"records", fits}, {"failures", failures}});
    write_json(dir / "census.json", {{"config_hash", hash}, {"axis", axis}, {"records", census}});
    if (cfg.base.spectrum) write_json(dir / "spectra.json", {{"config_hash", hash}, {"axis", axis}, {"records", spectra}});

    if (cfg.convergence) {
      json report = {{"config_hash", hash}, {"B_z", cfg.base.B_z}};
      try {
        const auto c = convergence_study(bath, cfg.base, *cfg.convergence);
        json entries = json::array();
        for (const auto& e : c.entries)
          entries.push_back({{"knob", e.knob}, {"setting", e.setting}, {"fit", fit_json(e.fit)},
                             {"degraded_fraction", e.degraded_fraction}, {"delta", e.delta}, {"flagged", e.flagged}});
        report["entries"] = entries;
        report["converged"] = c.converged();
        tally.add(true);
        out << "convergence: " << (c.converged() ? "converged" : "NOT converged") << '\n';
      } catch (const std::exception& e) {
        report["error"] = e.what();
        tally.add(false);
        err << "convergence study failed: " << e.what() << '\n';
      }
      write_json(dir / "convergence.json", report);
    }

    if (!cfg.ablations.empty()) {
      auto csv = open_out(dir / "ablation.csv");
      csv << "# config_hash=" << hash << '\n' << "variant,bath_size,T2_us,stretch_n,degraded_fraction,fit_order,resolved,status\n";
      for (std::size_t i = 0; i < cfg.ablations.size(); ++i) {
        const auto variant = cfg.ablations[i];
        try {
          const auto r = ablate_bath(bath, variant, cfg.base);
          const auto& f = r.point.fit;
          csv << to_string(variant) << ',' << r.bath.size() << ',' << (f.resolved ? num(f.T2) : "") << ','
              << (f.resolved ? num(f.stretch_n) : "") << ',' << num(r.point.gcce.degraded_fraction) << ','
              << r.point.fit_order << ',' << (f.resolved ? 1 : 0) << ",ok\n";
          if (cfg.outputs.curves)
            write_curves(dir / "curves" / ("ablation_" + std::string(to_string(variant)) + ".csv"), hash, r.point.gcce);
          tally.add(true);
          out << "ablation " << to_string(variant) << ": "
              << (f.resolved ? "T2 = " + num(f.T2) + " us" : std::string("no decay resolved")) << '\n';
        } catch (const std::exception& e) {
          csv << to_string(variant) << ",,,,,,0,failed\n";
          tally.add(false);
          err << "ablation " << to_string(variant) << " failed: " << e.what() << '\n';
        }
      }
    }
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << '\n';
    return kTotalFailure;
  }
  out << "outputs in " << dir.string() << " (config_hash " << hash.substr(0, 12) << ")\n";
  return tally.exit_code();
}

int cmd_oracle_check(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  Loaded l;
  std::vector<BathSpin> bath;
  fs::path dir;
  try {
    l = load(opts);
    bath = build_bath(l.cfg);
    dir = resolve_output_dir(l.cfg, opts.output_dir);
  } catch (const std::exception& e) {
    err << "validation failed: " << e.what() << '\n';
    return kValidationFailure;
  }
  const auto& cfg = l.cfg;
  const auto& o = cfg.oracle;
  if (o.spins < 1 || static_cast<std::size_t>(o.spins) > bath.size()) {
    err << "oracle-check: requested " << o.spins << " spins but the bath has " << bath.size() << '\n';
    return kValidationFailure;
  }
  const std::vector<BathSpin> spins(bath.begin(), bath.begin() + o.spins);
  try {
    cluster_dimension(spins, o.max_dim);
  } catch (const DimensionError& e) {
    err << "oracle-check refused: " << e.what() << '\n';
    return kValidationFailure;
  }
  try {
    const auto state = cfg.base.polarization.bath_state(spins.size());
    std::vector<SpinInitialState> states;
    for (std::size_t i = 0; i < spins.size(); ++i) states.push_back(state.of(i));
    const auto field = MagneticField::along_c(cfg.base.B_z);
    const auto times = uniform_times(o.t_max, o.points);
    const auto pairs = pair_couplings(spins, cfg.base.policy.r_pair);
    const auto exact = exact_coherence(cfg.base.central, spins, pairs, field, cfg.base.mode, states, times,
                                       OracleLimit{o.max_dim});

    SystemInputs sys;
    sys.central = cfg.base.central;
    sys.bath = spins;
    sys.field = field;
    sys.mode = cfg.base.mode;
    sys.bath_state = state;
    sys.r_pair = cfg.base.policy.r_pair;
    sys.max_dim = o.max_dim;
    std::vector<CoherenceCurve> orders;
    std::vector<double> deviation;
    for (int n = 1; n <= o.spins; ++n) {
      ClusterPolicy policy;
      policy.max_order = n;
      policy.r_bath = std::numeric_limits<double>::max();
      policy.r_connect = std::numeric_limits<double>::max();
      policy.r_pair = cfg.base.policy.r_pair;
      policy.max_dim = o.max_dim;
      orders.push_back(gcce_coherence(sys, policy, times, GcceOptions{cfg.base.threads, false}).total);
      double dev = 0.0;
      for (std::size_t k = 0; k < times.size(); ++k)
        dev = std::max(dev, std::abs(std::abs(orders.back().values[k]) - std::abs(exact.curve.values[k])));
      deviation.push_back(dev);
      out << "order " << n << ": max |d|L|| = " << num(dev) << '\n';
    }
    const bool pass = deviation.back() < o.tolerance;
    const bool closer = deviation.size() < 2 || deviation.back() < deviation[deviation.size() - 2];
    {
      auto csv = open_out(dir / "oracle.csv");
      csv << "# config_hash=" << l.hash << '\n' << "t_us,exact_abs";
      for (int n = 1; n <= o.spins; ++n) csv << ",gcce" << n << "_abs";
      csv << '\n';
      for (std::size_t k = 0; k < times.size(); ++k) {
        csv << num(times[k]) << ',' << num(std::abs(exact.curve.values[k]));
        for (const auto& c : orders) csv << ',' << num(std::abs(c.values[k]));
        csv << '\n';
      }
    }
    write_json(dir / "oracle.json", {{"config_hash", l.hash},
                                     {"spins", o.spins},
                                     {"max_deviation_per_order", deviation},
                                     {"tolerance", o.tolerance},
                                     {"full_order_closest", closer},
                                     {"max_trace_error", exact.diagnostics.max_trace_error},
                                     {"max_hermiticity_error", exact.diagnostics.max_hermiticity_error},
                                     {"pass", pass}});
    out << (pass ? "PASS" : "FAIL") << ": order " << o.spins << " deviation " << num(deviation.back())
        << (pass ? " < " : " >= ") << num(o.tolerance) << '\n';
    return pass ? kSuccess : kValidationFailure;
  } catch (const DimensionError& e) {
    err << "oracle-check refused: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const std::exception& e) {
    err << "oracle-check failed: " << e.what() << '\n';
    return kTotalFailure;
  }
}

int cmd_make_dataset(double radius, const fs::path& path, std::ostream& out, std::ostream& err) {
  try {
    LatticeSpec lattice;
    lattice.radius = radius;
    lattice.validate();
    const auto ds = make_synthetic_dataset(lattice);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    ds.write_csv(path);
    out << "wrote " << ds.size() << " hyperfine entries to " << path.string() << '\n';
    return kSuccess;
  } catch (const ValidationError& e) {
    err << "validation failed: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const std::exception& e) {
    err << "make-dataset failed: " << e.what() << '\n';
    return kTotalFailure;
  }
}

}  // namespace vbdecoh::app

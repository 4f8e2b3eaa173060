#include "config.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "vbdecoh/bath_io.hpp"
#include "vbdecoh/parallel.hpp"

namespace vbdecoh::app {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += "\n  - " + s;
  return out;
}

struct Problems {
  std::vector<std::string> list;
  void add(std::string s) { list.push_back(std::move(s)); }
};

// Strict view of one JSON object: every key that is not read is reported.
class Section {
 public:
  Section(const json* j, std::string path, Problems& problems) : j_(j), path_(std::move(path)), problems_(problems) {
    if (j_ && !j_->is_object()) {
      problems_.add(label() + ": expected an object");
      j_ = nullptr;
    }
  }
  Section(const Section&) = delete;
  ~Section() {
    if (!j_) return;
    for (const auto& [key, value] : j_->items())
      if (!seen_.contains(key)) problems_.add(where(key) + ": unknown key");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_ && j_->contains(key) && !j_->at(key).is_null();
  }
  const json* child(const std::string& key) { return has(key) ? &j_->at(key) : nullptr; }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = j_->at(key);
    if (!v.is_number()) return bad(key, "a number");
    out = v.get<double>();
  }
  template <class Int>
  void integer(const std::string& key, Int& out, long long lo) {
    if (!has(key)) return;
    const auto& v = j_->at(key);
    if (!v.is_number_integer()) return bad(key, "an integer");
    const long long x = v.get<long long>();
    if (x < lo) return problems_.add(where(key) + ": must be >= " + std::to_string(lo));
    out = static_cast<Int>(x);
  }
  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const auto& v = j_->at(key);
    if (!v.is_boolean()) return bad(key, "true or false");
    out = v.get<bool>();
  }
  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = j_->at(key);
    if (!v.is_string()) return bad(key, "a string");
    out = v.get<std::string>();
  }
  void vec3(const std::string& key, Vec3& out) {
    if (!has(key)) return;
    const auto& v = j_->at(key);
    if (!v.is_array() || v.size() != 3 || !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); }))
      return bad(key, "an array of 3 numbers");
    out = Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
  }
  template <class T>
  void numbers(const std::string& key, std::vector<T>& out) {
    if (!has(key)) return;
    const auto& v = j_->at(key);
    if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); }))
      return bad(key, "an array of numbers");
    out.clear();
    for (const auto& x : v) out.push_back(x.get<T>());
  }
  void bad(const std::string& key, const char* expected) { problems_.add(where(key) + ": expected " + expected); }
  std::string label() const { return path_.empty() ? "config" : path_; }

 private:
  const json* j_;
  std::string path_;
  Problems& problems_;
  std::set<std::string> seen_;
};

template <class Fn>
void check(Problems& problems, const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    problems.add(where + ": " + e.what());
  }
}

void read_policy(Section& s, ClusterPolicy& p) {
  s.integer("max_order", p.max_order, 1);
  s.number("r_bath", p.r_bath);
  s.number("r_connect", p.r_connect);
  s.number("r_pair", p.r_pair);
  s.integer("max_clusters_per_order", p.max_clusters_per_order, 0);
  s.boolean("strongest_first", p.strongest_first);
  s.integer("max_dim", p.max_dim, 3);
  s.integer("bath_samples", p.bath_samples, 0);
}

BoronIsotope boron_from(const std::string& s) {
  if (s == "11B") return BoronIsotope::B11;
  if (s == "10B") return BoronIsotope::B10;
  if (s == "natural") return BoronIsotope::natural;
  throw ValidationError("unknown boron isotope '" + s + "' (11B, 10B or natural)");
}

NitrogenIsotope nitrogen_from(const std::string& s) {
  if (s == "15N") return NitrogenIsotope::N15;
  if (s == "14N") return NitrogenIsotope::N14;
  if (s == "natural") return NitrogenIsotope::natural;
  throw ValidationError("unknown nitrogen isotope '" + s + "' (15N, 14N or natural)");
}

std::string to_label(BoronIsotope b) {
  return b == BoronIsotope::B11 ? "11B" : b == BoronIsotope::B10 ? "10B" : "natural";
}
std::string to_label(NitrogenIsotope n) {
  return n == NitrogenIsotope::N15 ? "15N" : n == NitrogenIsotope::N14 ? "14N" : "natural";
}

json policy_json(const ClusterPolicy& p) {
  return {{"max_order", p.max_order},
          {"r_bath", p.r_bath},
          {"r_connect", p.r_connect},
          {"r_pair", p.r_pair},
          {"max_clusters_per_order", p.max_clusters_per_order},
          {"strongest_first", p.strongest_first},
          {"max_dim", p.max_dim},
          {"bath_samples", p.bath_samples},
          {"sampling_seed", p.sampling_seed}};
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "unreadable";
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

json canonical(const RunConfig& c) {
  json j;
  j["lattice"] = {{"a", c.lattice.a}, {"c_interlayer", c.lattice.c_interlayer}, {"stacking", c.lattice.stacking},
                  {"radius", c.lattice.radius}};
  j["isotopes"] = {{"boron", to_label(c.isotopes.boron)}, {"nitrogen", to_label(c.isotopes.nitrogen)},
                   {"n14_cq", c.isotopes.n14_cq ? json(*c.isotopes.n14_cq) : json(nullptr)}};
  if (!c.bath_file.empty()) {
    j["bath_file_sha256"] = file_sha256(c.base_dir / c.bath_file);
  } else if (c.dataset == "synthetic") {
    j["hyperfine_dataset"] = "synthetic";
  } else {
    j["hyperfine_dataset_sha256"] = file_sha256(c.base_dir / c.dataset);
  }
  const auto& b = c.base;
  j["central"] = {{"D", b.central.D}, {"E", b.central.E}, {"g_e", b.central.g_e},
                  {"qubit_levels", {b.central.qubit_levels[0], b.central.qubit_levels[1]}}};
  j["hamiltonian"] = std::string(to_string(b.mode));
  j["field_mT"] = b.B_z;
  j["policy"] = policy_json(b.policy);
  j["polarization"] = {{"p", b.polarization.p},
                       {"axis", {b.polarization.axis.x(), b.polarization.axis.y(), b.polarization.axis.z()}},
                       {"shell_size", b.polarization.shell_size}};
  j["time_grid"] = {{"t_max_us", b.grid.t_max},         {"points", b.grid.points},
                    {"span_factor", b.grid.span_factor}, {"pilot_points", b.grid.pilot_points},
                    {"pilot_cap", b.grid.pilot_cap}};
  const auto& so = b.spectrum_options;
  j["spectrum"] = {{"enabled", b.spectrum},
                   {"signal", so.signal == SpectrumOptions::Signal::magnitude ? "magnitude" : "real_part"},
                   {"min_nyquist_MHz", so.min_nyquist},
                   {"min_frequency_MHz", so.min_frequency},
                   {"min_relative_weight", so.min_relative_weight},
                   {"max_peaks", so.max_peaks},
                   {"zero_pad", so.zero_pad},
                   {"window_us", so.window}};
  if (c.sweep) {
    json overrides = json::array();
    for (std::size_t i = 0; i < c.sweep->policy_overrides.size(); ++i)
      if (c.sweep->policy_overrides[i]) overrides.push_back({{"index", i}, {"policy", policy_json(*c.sweep->policy_overrides[i])}});
    j["sweep"] = {{"axis", std::string(to_string(c.sweep->axis))}, {"points", c.sweep->points}, {"overrides", overrides}};
  }
  if (c.convergence)
    j["convergence"] = {{"orders", c.convergence->orders},
                        {"radii", c.convergence->radii},
                        {"caps", c.convergence->caps},
                        {"tolerance", c.convergence->tolerance}};
  json ablations = json::array();
  for (auto a : c.ablations) ablations.push_back(std::string(to_string(a)));
  j["ablations"] = ablations;
  j["oracle"] = {{"spins", c.oracle.spins},
                 {"t_max_us", c.oracle.t_max},
                 {"points", c.oracle.points},
                 {"tolerance", c.oracle.tolerance},
                 {"max_dim", c.oracle.max_dim}};
  j["seed"] = c.seed;
  return j;
}

json low_field_samples(double below, int samples, json policy) {
  policy["bath_samples"] = samples;
  return {{"below", below}, {"policy", policy}};
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : ValidationError("invalid configuration:" + join(problems)), problems_(std::move(problems)) {}

json preset_document(const std::string& name) {
  json base = {
      {"lattice", {{"radius", 20.0}}},
      {"isotopes", {{"boron", "11B"}, {"nitrogen", "15N"}}},
      {"hyperfine_dataset", "synthetic"},
      {"central", {{"D", 3470.0}, {"E", 50.0}}},
      {"seed", 1},
  };
  const json desk3 = {{"max_order", 3}, {"r_bath", 20.0}, {"r_connect", 6.0}, {"max_clusters_per_order", 5000}};
  const json desk2 = {{"max_order", 2}, {"r_bath", 20.0}, {"r_connect", 6.0}, {"max_clusters_per_order", 5000}};
  if (name == "table-1") {
    base["policy"] = desk3;
    base["sweep"] = {{"axis", "B_z"},
                     {"points", {0.0, 8.0, 8.5, 8.7, 15.0, 20.0, 3000.0}},
                     {"overrides", {low_field_samples(100.0, 4, desk3)}}};
  } else if (name == "figure-2a") {
    base["policy"] = desk2;
    base["sweep"] = {{"axis", "B_z"}, {"points", "default_field_grid"}, {"overrides", {low_field_samples(100.0, 4, desk2)}}};
  } else if (name == "figure-3a") {
    json p = desk3;
    p["max_order"] = 4;
    p["max_clusters_per_order"] = 2000;
    p["bath_samples"] = 4;
    base["policy"] = p;
    base["field_mT"] = 0.0;
    base["ablations"] = {"nitrogen_only", "boron_only", "drop_first_shell"};
  } else if (name == "figure-4") {
    json p = desk2;
    p["bath_samples"] = 4;
    base["policy"] = p;
    base["field_mT"] = 50.0;
    base["polarization"] = {{"axis", {0.0, 0.0, -1.0}}, {"shell_size", 3}};
    base["sweep"] = {{"axis", "polarization"}, {"points", {0.0, 0.3, 0.62, 1.0}}};
    base["ablations"] = {"nitrogen_only", "boron_only"};
    base["outputs"] = {{"spectra", true}};
  } else if (name == "figure-5") {
    base["policy"] = desk3;
    base["sweep"] = {{"axis", "B_z"}, {"points", {180.0, 200.0, 225.0, 250.0, 275.0, 300.0, 325.0, 350.0}}};
  } else {
    std::string names;
    for (const auto& p : kPresets) names += (names.empty() ? "" : ", ") + p;
    throw ValidationError("unknown preset '" + name + "' (" + names + ")");
  }
  return base;
}

json load_document(const std::optional<std::filesystem::path>& path, const std::optional<std::string>& preset) {
  json doc = preset ? preset_document(*preset) : json::object();
  if (!path) {
    if (!preset) throw ValidationError("a config file or --preset is required");
    return doc;
  }
  std::ifstream in(*path);
  if (!in) throw ValidationError("cannot open config file " + path->string());
  json user;
  try {
    user = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path->string() + " is not valid JSON: " + e.what());
  }
  if (!user.is_object()) throw ValidationError("config root must be a JSON object");
  doc.merge_patch(user);
  return doc;
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  Problems problems;
  RunConfig c;
  c.base_dir = base_dir;
  {
    Section top(&doc, "", problems);
    top.integer("seed", c.seed, 0);
    c.isotopes.rng_seed = c.seed;
    c.base.policy.sampling_seed = c.seed;

    {
      Section s(top.child("lattice"), "lattice", problems);
      s.number("a", c.lattice.a);
      s.number("c_interlayer", c.lattice.c_interlayer);
      s.string("stacking", c.lattice.stacking);
      s.number("radius", c.lattice.radius);
      check(problems, "lattice", [&] { c.lattice.validate(); });
    }
    {
      Section s(top.child("isotopes"), "isotopes", problems);
      std::string boron = "11B", nitrogen = "15N";
      s.string("boron", boron);
      s.string("nitrogen", nitrogen);
      check(problems, "isotopes.boron", [&] { c.isotopes.boron = boron_from(boron); });
      check(problems, "isotopes.nitrogen", [&] { c.isotopes.nitrogen = nitrogen_from(nitrogen); });
      if (s.has("n14_cq")) {
        double cq = 0.0;
        s.number("n14_cq", cq);
        c.isotopes.n14_cq = cq;
      }
      check(problems, "isotopes", [&] { c.isotopes.validate(); });
    }
    top.string("hyperfine_dataset", c.dataset);
    top.string("bath_file", c.bath_file);
    if (c.dataset != "synthetic" && !std::filesystem::exists(base_dir / c.dataset))
      problems.add("hyperfine_dataset: file " + (base_dir / c.dataset).string() + " does not exist");
    if (!c.bath_file.empty() && !std::filesystem::exists(base_dir / c.bath_file))
      problems.add("bath_file: file " + (base_dir / c.bath_file).string() + " does not exist");

    auto& b = c.base;
    {
      Section s(top.child("central"), "central", problems);
      s.number("D", b.central.D);
      s.number("E", b.central.E);
      s.number("g_e", b.central.g_e);
      std::vector<int> levels;
      s.numbers("qubit_levels", levels);
      if (!levels.empty()) {
        if (levels.size() != 2)
          problems.add("central.qubit_levels: expected two m_S values");
        else
          b.central.qubit_levels = {levels[0], levels[1]};
      }
      check(problems, "central", [&] { b.central.validate(); });
    }
    std::string mode = "full";
    top.string("hamiltonian", mode);
    check(problems, "hamiltonian", [&] { b.mode = hamiltonian_mode_from_string(mode); });
    top.number("field_mT", b.B_z);
    {
      Section s(top.child("policy"), "policy", problems);
      read_policy(s, b.policy);
      check(problems, "policy", [&] { b.policy.validate(); });
    }
    {
      Section s(top.child("polarization"), "polarization", problems);
      s.number("p", b.polarization.p);
      s.vec3("axis", b.polarization.axis);
      s.integer("shell_size", b.polarization.shell_size, 0);
      check(problems, "polarization", [&] { b.polarization.validate(); });
    }
    {
      Section s(top.child("time_grid"), "time_grid", problems);
      s.number("t_max_us", b.grid.t_max);
      s.integer("points", b.grid.points, 0);
      s.number("span_factor", b.grid.span_factor);
      s.integer("pilot_points", b.grid.pilot_points, 0);
      s.integer("pilot_cap", b.grid.pilot_cap, 0);
      check(problems, "time_grid", [&] { b.grid.validate(); });
    }
    {
      Section s(top.child("spectrum"), "spectrum", problems);
      auto& so = b.spectrum_options;
      std::string signal = "magnitude";
      s.string("signal", signal);
      if (signal == "magnitude")
        so.signal = SpectrumOptions::Signal::magnitude;
      else if (signal == "real_part")
        so.signal = SpectrumOptions::Signal::real_part;
      else
        problems.add("spectrum.signal: expected magnitude or real_part");
      s.number("min_nyquist_MHz", so.min_nyquist);
      s.number("min_frequency_MHz", so.min_frequency);
      s.number("min_relative_weight", so.min_relative_weight);
      s.integer("max_peaks", so.max_peaks, 1);
      s.integer("zero_pad", so.zero_pad, 1);
      s.number("window_us", so.window);
      if (so.min_frequency < 0.0) problems.add("spectrum.min_frequency_MHz: must be >= 0");
      if (so.window < 0.0) problems.add("spectrum.window_us: must be >= 0");
      if (!(so.min_nyquist > 0.0)) problems.add("spectrum.min_nyquist_MHz: must be positive");
    }
    {
      Section s(top.child("outputs"), "outputs", problems);
      s.boolean("curves", c.outputs.curves);
      s.boolean("spectra", c.outputs.spectra);
      s.boolean("bath_snapshot", c.outputs.bath_snapshot);
      b.spectrum = c.outputs.spectra;
    }
    if (const json* sw = top.child("sweep")) {
      Section s(sw, "sweep", problems);
      SweepSpec spec;
      std::string axis = "B_z";
      s.string("axis", axis);
      check(problems, "sweep.axis", [&] { spec.axis = sweep_axis_from_string(axis); });
      if (const json* pts = s.child("points"); pts && pts->is_string()) {
        if (*pts == "default_field_grid" && spec.axis == SweepAxis::B_z)
          check(problems, "sweep.points", [&] { spec.points = default_field_grid(b.central); });
        else
          problems.add("sweep.points: only \"default_field_grid\" (B_z axis) may replace an explicit list");
      } else {
        s.numbers("points", spec.points);
      }
      if (const json* ov = s.child("overrides")) {
        if (!ov->is_array()) problems.add("sweep.overrides: expected an array");
        for (std::size_t k = 0; ov->is_array() && k < ov->size(); ++k) {
          const std::string where = "sweep.overrides[" + std::to_string(k) + "]";
          Section o(&(*ov)[k], where, problems);
          ClusterPolicy p = b.policy;
          {
            Section ps(o.child("policy"), where + ".policy", problems);
            read_policy(ps, p);
          }
          std::vector<std::size_t> indices;
          o.numbers("indices", indices);
          if (o.has("below")) {
            double below = 0.0;
            o.number("below", below);
            for (std::size_t i = 0; i < spec.points.size(); ++i)
              if (spec.points[i] < below) indices.push_back(i);
          }
          spec.policy_overrides.resize(spec.points.size());
          for (auto i : indices) {
            if (i >= spec.points.size())
              problems.add(where + ".indices: " + std::to_string(i) + " is out of range");
            else
              spec.policy_overrides[i] = p;
          }
        }
      }
      check(problems, "sweep", [&] { spec.validate(); });
      c.sweep = std::move(spec);
    }
    if (const json* cv = top.child("convergence")) {
      Section s(cv, "convergence", problems);
      ConvergencePlan plan;
      s.numbers("orders", plan.orders);
      s.numbers("radii", plan.radii);
      s.numbers("caps", plan.caps);
      s.number("tolerance", plan.tolerance);
      check(problems, "convergence", [&] { plan.validate(); });
      c.convergence = std::move(plan);
    }
    if (const json* ab = top.child("ablations")) {
      if (!ab->is_array()) problems.add("ablations: expected an array of names");
      for (std::size_t k = 0; ab->is_array() && k < ab->size(); ++k) {
        const auto& v = (*ab)[k];
        if (!v.is_string()) {
          problems.add("ablations[" + std::to_string(k) + "]: expected a string");
          continue;
        }
        check(problems, "ablations[" + std::to_string(k) + "]",
              [&] { c.ablations.push_back(ablation_from_string(v.get<std::string>())); });
      }
    }
    {
      Section s(top.child("oracle"), "oracle", problems);
      s.integer("spins", c.oracle.spins, 1);
      if (c.oracle.spins > 4) problems.add("oracle.spins: at most 4 (the expansion stops at order 4)");
      s.number("t_max_us", c.oracle.t_max);
      s.integer("points", c.oracle.points, 2);
      s.number("tolerance", c.oracle.tolerance);
      s.integer("max_dim", c.oracle.max_dim, 3);
      if (!(c.oracle.t_max > 0.0)) problems.add("oracle.t_max_us: must be positive");
      if (!(c.oracle.tolerance > 0.0)) problems.add("oracle.tolerance: must be positive");
    }
    top.string("output_dir", c.output_dir);
    int threads = 0;
    top.integer("threads", threads, 1);
    c.base.threads = threads > 0 ? threads : 0;
  }
  if (!problems.list.empty()) throw ConfigError(std::move(problems.list));
  c.physics = canonical(c);
  return c;
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(cfg.physics.dump()); }

std::vector<BathSpin> build_bath(const RunConfig& cfg) {
  if (!cfg.bath_file.empty()) return load_bath(cfg.base_dir / cfg.bath_file);
  const auto dataset = cfg.dataset == "synthetic" ? make_synthetic_dataset(cfg.lattice)
                                                  : HyperfineDataset::read_csv(cfg.base_dir / cfg.dataset);
  return generate_bath(cfg.lattice, cfg.isotopes, dataset);
}

std::filesystem::path resolve_output_dir(const RunConfig& cfg, const std::optional<std::string>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return cfg.output_dir;
}

int resolve_threads(const RunConfig& cfg, std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw ValidationError("--threads must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv(kThreadsEnv); env && *env) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) throw ValidationError(std::string(kThreadsEnv) + " must be a positive integer");
    return static_cast<int>(n);
  }
  if (cfg.base.threads > 0) return cfg.base.threads;
  return default_threads();
}

}  // namespace vbdecoh::app

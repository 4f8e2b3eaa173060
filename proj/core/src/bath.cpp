#include "vbdecoh/bath.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>

#include "vbdecoh/errors.hpp"

namespace vbdecoh {

namespace {

std::string describe_site(const Vec3& r, Element e) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << to_string(e) << "(" << r.x() << ", " << r.y() << ", " << r.z()
      << ")";
  return out.str();
}

// Uniform double in [0, 1) from the raw 64-bit stream; independent of the
// standard library's distribution implementation.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Mat3 axial_frame_tensor(const Vec3& axis, double along, double across_in_plane, double out_of_plane) {
  const Vec3 z(0.0, 0.0, 1.0);
  const Vec3 t = z.cross(axis).normalized();
  return along * axis * axis.transpose() + across_in_plane * t * t.transpose() + out_of_plane * z * z.transpose();
}

}  // namespace

void LatticeSpec::validate() const {
  if (!(a > 0.0) || !(c_interlayer > 0.0)) throw ValidationError("lattice constants must be positive");
  if (!(radius > 0.0)) throw ValidationError("lattice radius must be positive");
  if (stacking != "AA'") throw ValidationError("only AA' stacking is supported, got '" + stacking + "'");
  if (!defect_site.allFinite()) throw ValidationError("defect site must be finite");
}

std::vector<LatticeSite> generate_lattice_sites(const LatticeSpec& lattice) {
  lattice.validate();
  const Vec3 a1(lattice.a, 0.0, 0.0);
  const Vec3 a2(0.5 * lattice.a, 0.5 * std::sqrt(3.0) * lattice.a, 0.0);
  const Vec3 basis_shift = (a1 + a2) / 3.0;
  const int n_layers = static_cast<int>(std::floor(lattice.radius / lattice.c_interlayer));
  const int n_cells = static_cast<int>(std::ceil(lattice.radius / (0.5 * lattice.a))) + 2;
  const double r2max = lattice.radius * lattice.radius + 1e-9;

  std::vector<LatticeSite> sites;
  for (int layer = -n_layers; layer <= n_layers; ++layer) {
    const double z = layer * lattice.c_interlayer;
    // AA': boron sits over nitrogen in the neighboring layer
    const bool even = layer % 2 == 0;
    const Element at_origin = even ? Element::boron : Element::nitrogen;
    const Element at_shift = even ? Element::nitrogen : Element::boron;
    for (int i = -n_cells; i <= n_cells; ++i) {
      for (int j = -n_cells; j <= n_cells; ++j) {
        const Vec3 r = i * a1 + j * a2 + Vec3(0.0, 0.0, z);
        for (const auto& [pos, element] : {std::pair{r, at_origin}, std::pair{Vec3(r + basis_shift), at_shift}}) {
          if (pos.squaredNorm() > r2max) continue;
          if (layer == 0 && i == 0 && j == 0 && element == Element::boron) continue;  // vacancy
          sites.push_back({pos + lattice.defect_site, element, layer});
        }
      }
    }
  }
  std::sort(sites.begin(), sites.end(), [&](const LatticeSite& l, const LatticeSite& r) {
    const double dl = (l.position - lattice.defect_site).squaredNorm();
    const double dr = (r.position - lattice.defect_site).squaredNorm();
    if (std::abs(dl - dr) > 1e-9) return dl < dr;
    return std::tie(l.position.z(), l.position.y(), l.position.x()) <
           std::tie(r.position.z(), r.position.y(), r.position.x());
  });
  return sites;
}

void IsotopeConfig::validate() const {
  const bool may_have_n14 = nitrogen != NitrogenIsotope::N15;
  if (may_have_n14 && !n14_cq) throw ValidationError("14N quadrupole constant (n14_cq) must be given");
}

std::size_t HyperfineDataset::KeyHash::operator()(
    const std::tuple<std::int64_t, std::int64_t, std::int64_t>& k) const {
  const auto h1 = std::hash<std::int64_t>{}(std::get<0>(k));
  const auto h2 = std::hash<std::int64_t>{}(std::get<1>(k));
  const auto h3 = std::hash<std::int64_t>{}(std::get<2>(k));
  return h1 ^ (h2 * 0x9e3779b97f4a7c15ULL) ^ (h3 * 0xc2b2ae3d27d4eb4fULL);
}

void HyperfineDataset::add(HyperfineEntry entry) {
  index_[{key(entry.position.x()), key(entry.position.y()), key(entry.position.z())}].push_back(entries_.size());
  entries_.push_back(std::move(entry));
}

const HyperfineEntry* HyperfineDataset::find(const Vec3& position, Element element, double tolerance) const {
  const auto kx = key(position.x()), ky = key(position.y()), kz = key(position.z());
  const std::int64_t reach = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(tolerance * 100.0)));
  const HyperfineEntry* best = nullptr;
  double best_d = tolerance;
  for (auto dx = -reach; dx <= reach; ++dx)
    for (auto dy = -reach; dy <= reach; ++dy)
      for (auto dz = -reach; dz <= reach; ++dz) {
        auto it = index_.find({kx + dx, ky + dy, kz + dz});
        if (it == index_.end()) continue;
        for (auto idx : it->second) {
          const auto& e = entries_[idx];
          if (e.element != element) continue;
          const double d = (e.position - position).norm();
          if (d <= best_d) {
            best = &e;
            best_d = d;
          }
        }
      }
  return best;
}

HyperfineDataset HyperfineDataset::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open hyperfine dataset '" + path.string() + "'");
  HyperfineDataset ds;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      // "# reference_isotopes: 11B,14N"
      const auto pos = line.find("reference_isotopes:");
      if (pos != std::string::npos) {
        std::string refs = line.substr(pos + 19);
        refs.erase(std::remove(refs.begin(), refs.end(), ' '), refs.end());
        const auto comma = refs.find(',');
        if (comma != std::string::npos) {
          ds.reference_boron = refs.substr(0, comma);
          ds.reference_nitrogen = refs.substr(comma + 1);
        }
      }
      continue;
    }
    if (!header_seen) {
      if (line.rfind("x_ang,y_ang,z_ang,element,Axx,Axy,Axz,Ayx,Ayy,Ayz,Azx,Azy,Azz", 0) != 0)
        throw DatasetError(path.string() + ": unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::array<double, 12> v{};
    std::string element;
    std::size_t start = 0;
    for (int field = 0; field < 13; ++field) {
      const auto end = line.find(',', start);
      const std::string_view tok =
          std::string_view(line).substr(start, end == std::string::npos ? std::string::npos : end - start);
      if (field == 3) {
        element = std::string(tok);
      } else {
        double& slot = v[field < 3 ? field : field - 1];
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), slot);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
          throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + std::string(tok) + "'");
      }
      if (end == std::string::npos) {
        if (field != 12) throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": expected 13 columns");
        break;
      }
      start = end + 1;
    }
    Element e;
    if (element == "B") e = Element::boron;
    else if (element == "N") e = Element::nitrogen;
    else throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": unknown element '" + element + "'");
    Mat3 A;
    A << v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11];
    ds.add({Vec3(v[0], v[1], v[2]), e, A});
  }
  if (!header_seen) throw DatasetError(path.string() + ": empty dataset");
  return ds;
}

void HyperfineDataset::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write hyperfine dataset '" + path.string() + "'");
  out << "# reference_isotopes: " << reference_boron << "," << reference_nitrogen << "\n";
  out << "x_ang,y_ang,z_ang,element,Axx,Axy,Axz,Ayx,Ayy,Ayz,Azx,Azy,Azz\n";
  out << std::setprecision(10);
  for (const auto& e : entries_) {
    out << e.position.x() << ',' << e.position.y() << ',' << e.position.z() << ',' << to_string(e.element);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) out << ',' << e.A(a, b);
    out << '\n';
  }
}

std::vector<std::string> HyperfineDataset::off_lattice_entries(const LatticeSpec& lattice) const {
  double rmax = 0.0;
  for (const auto& e : entries_) rmax = std::max(rmax, (e.position - lattice.defect_site).norm());
  LatticeSpec covering = lattice;
  covering.radius = rmax + 1.0;
  HyperfineDataset sites;
  for (const auto& s : generate_lattice_sites(covering)) sites.add({s.position, s.element, Mat3::Zero()});
  std::vector<std::string> bad;
  for (const auto& e : entries_)
    if (!sites.find(e.position, e.element, 1e-3)) bad.push_back(describe_site(e.position, e.element));
  return bad;
}

std::optional<double> HyperfineDataset::detect_vacancy_layer(double tolerance) const {
  std::map<std::int64_t, std::pair<double, bool>> layers;  // z key -> (z, all in-plane zeros)
  for (const auto& e : entries_) {
    auto& [z, zeros] = layers.try_emplace(key(e.position.z()), e.position.z(), true).first->second;
    const double off = std::max({std::abs(e.A(0, 2)), std::abs(e.A(1, 2)), std::abs(e.A(2, 0)), std::abs(e.A(2, 1))});
    if (off > tolerance) zeros = false;
  }
  std::optional<double> found;
  for (const auto& [k, layer] : layers) {
    if (!layer.second) continue;
    if (found) return std::nullopt;
    found = layer.first;
  }
  return found;
}

HyperfineDataset make_synthetic_dataset(const LatticeSpec& lattice, const SyntheticHyperfineModel& model) {
  const auto sites = generate_lattice_sites(lattice);
  const double ge = PhysicalConstants::g_e;
  const double g_b = species::B11().g_N;
  const double g_n = species::N14(0.0).g_N;
  const double nn = lattice.a / std::sqrt(3.0);

  struct Center {
    Vec3 r;
    double weight;
  };
  std::vector<Center> centers;
  std::vector<std::pair<Vec3, double>> contact_sites;  // nitrogen nuclei carrying spin density
  const double iso_n1 = (model.n1_radial + model.n1_tangential + model.n1_axial) / 3.0;
  const double contact_per_weight = iso_n1 / model.lobe_weight;

  for (const auto& s : sites) {
    if (s.element != Element::nitrogen || s.layer != 0) continue;
    const Vec3 rel = s.position - lattice.defect_site;
    const double d = rel.norm();
    if (std::abs(d - nn) < 1e-3) {
      centers.push_back({s.position - model.lobe_offset * rel.normalized(), model.lobe_weight});
    } else if (std::abs(d - 2.0 * nn) < 1e-3) {
      centers.push_back({s.position, model.n3_weight});
      contact_sites.emplace_back(s.position, model.n3_weight);
    } else if (std::abs(d - std::sqrt(7.0) * nn) < 1e-3) {
      centers.push_back({s.position, model.n4_weight});
      contact_sites.emplace_back(s.position, model.n4_weight);
    }
  }

  HyperfineDataset ds;
  for (const auto& s : sites) {
    const Vec3 rel = s.position - lattice.defect_site;
    const double g_ref = s.element == Element::boron ? g_b : g_n;
    Mat3 A = Mat3::Zero();
    if (s.element == Element::nitrogen && s.layer == 0 && std::abs(rel.norm() - nn) < 1e-3) {
      A = axial_frame_tensor(rel.normalized(), model.n1_radial, model.n1_tangential, model.n1_axial);
    } else {
      for (const auto& c : centers) {
        const Vec3 d = s.position - c.r;
        const double r = d.norm();
        if (r < 1e-6) continue;  // own density enters through the contact term
        const Vec3 n = d / r;
        A -= PhysicalConstants::electron_nuclear_dipolar * ge * g_ref * c.weight / (r * r * r) *
             (Mat3::Identity() - 3.0 * n * n.transpose());
      }
      if (s.element == Element::nitrogen)
        for (const auto& [pos, w] : contact_sites)
          if ((pos - s.position).norm() < 1e-6) A += contact_per_weight * w * Mat3::Identity();
    }
    // exact in-plane zeros on the defect layer
    if (s.layer == 0) A(0, 2) = A(1, 2) = A(2, 0) = A(2, 1) = 0.0;
    ds.add({s.position, s.element, A});
  }
  return ds;
}

std::vector<BathSpin> generate_bath(const LatticeSpec& lattice, const IsotopeConfig& isotopes,
                                    const HyperfineDataset& dataset) {
  isotopes.validate();
  const auto sites = generate_lattice_sites(lattice);
  const auto ref_b = species::by_label(dataset.reference_boron, isotopes.n14_cq);
  const auto ref_n = species::by_label(dataset.reference_nitrogen, isotopes.n14_cq);

  std::mt19937_64 rng(isotopes.rng_seed);
  std::vector<BathSpin> bath;
  std::vector<std::string> missing;
  bath.reserve(sites.size());
  for (const auto& site : sites) {
    const double draw = unit_draw(rng);  // one draw per site keeps the stream stable
    SpinSpecies sp;
    if (site.element == Element::boron) {
      switch (isotopes.boron) {
        case BoronIsotope::B11: sp = species::B11(); break;
        case BoronIsotope::B10: sp = species::B10(); break;
        case BoronIsotope::natural:
          sp = draw < IsotopeConfig::natural_b11_fraction ? species::B11() : species::B10();
          break;
      }
    } else {
      const double cq = isotopes.n14_cq.value_or(0.0);
      switch (isotopes.nitrogen) {
        case NitrogenIsotope::N15: sp = species::N15(); break;
        case NitrogenIsotope::N14: sp = species::N14(cq); break;
        case NitrogenIsotope::natural:
          sp = draw < IsotopeConfig::natural_n14_fraction ? species::N14(cq) : species::N15();
          break;
      }
    }
    const auto* entry = dataset.find(site.position, site.element);
    if (!entry) {
      missing.push_back(describe_site(site.position, site.element));
      continue;
    }
    const auto& ref = site.element == Element::boron ? ref_b : ref_n;
    const double scale = sp.g_N / ref.g_N;
    bath.push_back(BathSpin::make(site.position, std::move(sp), scale * entry->A));
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "missing hyperfine entry for " << missing.size() << " site(s) within " << lattice.radius << " A:";
    const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
    for (std::size_t k = 0; k < shown; ++k) msg << ' ' << missing[k];
    if (shown < missing.size()) msg << " ...";
    throw DatasetError(msg.str());
  }
  std::stable_sort(bath.begin(), bath.end(), [](const BathSpin& l, const BathSpin& r) {
    const double nl = l.A.norm(), nr = r.A.norm();
    if (std::abs(nl - nr) > 1e-12 * std::max(nl, nr)) return nl > nr;
    return false;  // keep lattice (distance) order among equal norms
  });
  return bath;
}

PairCoupling dipolar_tensor(const BathSpin& s1, const BathSpin& s2, std::size_t i, std::size_t j) {
  const Vec3 d = s2.position - s1.position;
  const double r = d.norm();
  if (r <= 0.1) throw ValidationError("dipolar_tensor: spins closer than 0.1 A");
  const Vec3 n = d / r;
  const double pref = PhysicalConstants::nuclear_nuclear_dipolar * s1.species.g_N * s2.species.g_N / (r * r * r);
  return {i, j, pref * (Mat3::Identity() - 3.0 * n * n.transpose())};
}

std::vector<PairCoupling> pair_couplings(std::span<const BathSpin> bath, double r_pair) {
  std::vector<PairCoupling> out;
  if (bath.empty() || r_pair <= 0.0) return out;
  NeighborGrid grid(bath, r_pair);
  for (std::size_t i = 0; i < bath.size(); ++i)
    for (auto j : grid.within(i, r_pair))
      if (j > i) out.push_back(dipolar_tensor(bath[i], bath[j], i, j));
  return out;
}

std::vector<std::pair<int, double>> hyperfine_shell_profile(std::span<const BathSpin> bath, int count) {
  if (count < 0 || static_cast<std::size_t>(count) > bath.size())
    throw ValidationError("hyperfine_shell_profile: count exceeds bath size");
  std::vector<std::pair<int, double>> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) out.emplace_back(k + 1, bath[k].A.norm());
  return out;
}

std::vector<HyperfineShell> hyperfine_shells(std::span<const BathSpin> bath, double rel_tol) {
  std::vector<HyperfineShell> shells;
  for (const auto& s : bath) {
    const double n = s.A.norm();
    const Element e = species::element_of(s.species);
    if (!shells.empty() && shells.back().element == e &&
        std::abs(shells.back().norm - n) <= rel_tol * std::max(shells.back().norm, n)) {
      ++shells.back().multiplicity;
      continue;
    }
    shells.push_back({n, 1, e});
  }
  return shells;
}

NeighborGrid::NeighborGrid(std::span<const BathSpin> bath, double cell) : bath_(bath), cell_(cell) {
  if (!(cell > 0.0)) throw ValidationError("NeighborGrid: cell size must be positive");
  for (std::size_t i = 0; i < bath.size(); ++i) {
    const Vec3& r = bath[i].position;
    cells_[cell_key(static_cast<int>(std::floor(r.x() / cell_)), static_cast<int>(std::floor(r.y() / cell_)),
                    static_cast<int>(std::floor(r.z() / cell_)))]
        .push_back(i);
  }
}

std::int64_t NeighborGrid::cell_key(int x, int y, int z) const {
  constexpr std::int64_t off = 1 << 20;
  return ((x + off) << 42) ^ ((y + off) << 21) ^ (z + off);
}

std::vector<std::size_t> NeighborGrid::within(std::size_t i, double radius) const {
  const Vec3& r = bath_[i].position;
  const int reach = static_cast<int>(std::ceil(radius / cell_));
  const int cx = static_cast<int>(std::floor(r.x() / cell_));
  const int cy = static_cast<int>(std::floor(r.y() / cell_));
  const int cz = static_cast<int>(std::floor(r.z() / cell_));
  std::vector<std::size_t> out;
  const double r2 = radius * radius;
  for (int dx = -reach; dx <= reach; ++dx)
    for (int dy = -reach; dy <= reach; ++dy)
      for (int dz = -reach; dz <= reach; ++dz) {
        auto it = cells_.find(cell_key(cx + dx, cy + dy, cz + dz));
        if (it == cells_.end()) continue;
        for (auto j : it->second)
          if (j != i && (bath_[j].position - r).squaredNorm() <= r2) out.push_back(j);
      }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace vbdecoh

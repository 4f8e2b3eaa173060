#include "vbdecoh/cce.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "vbdecoh/bath.hpp"
#include "vbdecoh/errors.hpp"
#include "vbdecoh/parallel.hpp"
#include "vbdecoh/spin_operators.hpp"

namespace vbdecoh {

Cluster::Cluster(std::vector<std::size_t> idx) : indices(std::move(idx)) {
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
    throw ValidationError("cluster indices must be distinct");
}

void ClusterPolicy::validate() const {
  if (max_order < 1 || max_order > 4) throw ValidationError("max_order must be between 1 and 4");
  if (!(r_bath > 0.0)) throw ValidationError("r_bath must be positive");
  if (!(r_connect > 0.0)) throw ValidationError("r_connect must be positive");
  if (r_pair < 0.0) throw ValidationError("r_pair must be non-negative");
  if (max_dim < kCentralSpinDim) throw ValidationError("max_dim must be at least 3");
  if (bath_samples < 0) throw ValidationError("bath_samples must be non-negative");
}

namespace {

double nonsecular_norm(const Mat3& A) { return A.topLeftCorner<2, 2>().norm(); }

CMatrix overhauser_term(const Vec3& field, HamiltonianMode mode) {
  const auto S = SpinMatrices::make(2);
  CMatrix out = CMatrix::Zero(3, 3);
  for (int a = mode == HamiltonianMode::pseudo_secular ? 2 : 0; a < 3; ++a) out += field[a] * S.component(a);
  return out;
}

std::string describe(const Cluster& c) {
  std::ostringstream out;
  out << '{';
  for (std::size_t k = 0; k < c.indices.size(); ++k) out << (k ? "," : "") << c.indices[k];
  out << '}';
  return out.str();
}

}  // namespace

ClusterScorer::ClusterScorer(std::span<const BathSpin> bath, const CentralSpinParams& central,
                             const MagneticField& field, HamiltonianMode mode)
    : bath_(bath), mediated_(mode == HamiltonianMode::full) {
  nonsecular_.reserve(bath.size());
  larmor_.reserve(bath.size());
  for (const auto& s : bath) {
    nonsecular_.push_back(nonsecular_norm(s.A));
    larmor_.push_back(s.species.g_N * PhysicalConstants::mu_N * field.B.z());
  }
  gap_ = std::max(1.0, std::abs(central.D - central.g_e * PhysicalConstants::mu_B * field.B.z()));
}

double ClusterScorer::pair_weight(std::size_t i, std::size_t j) const {
  const double J = dipolar_tensor(bath_[i], bath_[j]).J.norm();
  const double dw = larmor_[i] - larmor_[j];
  const double dA = std::abs(bath_[i].A(2, 2) - bath_[j].A(2, 2));
  double w = J * J / std::hypot(J, dw) * dA / std::max(std::hypot(dA, J), 1e-300);
  if (mediated_) w += nonsecular_[i] * nonsecular_[j] / gap_;
  return w;
}

double ClusterScorer::cluster_weight(const Cluster& c) const {
  double w = 0.0;
  for (std::size_t a = 0; a < c.indices.size(); ++a)
    for (std::size_t b = a + 1; b < c.indices.size(); ++b) w += pair_weight(c.indices[a], c.indices[b]);
  return w;
}

std::vector<Cluster> enumerate_clusters(std::span<const BathSpin> bath, const ClusterPolicy& policy,
                                        const ClusterScorer* scorer) {
  policy.validate();
  auto weight = [&](const Cluster& c) {
    if (c.order() == 1) return bath[c.indices[0]].A.norm();
    if (scorer) return scorer->cluster_weight(c);
    double w = 0.0;
    for (std::size_t a = 0; a < c.indices.size(); ++a)
      for (std::size_t b = a + 1; b < c.indices.size(); ++b) {
        const double d = (bath[c.indices[a]].position - bath[c.indices[b]].position).norm();
        w += 1.0 / (d * d * d);
      }
    return w;
  };
  auto truncate = [&](std::vector<Cluster>& level) {
    const std::size_t cap = policy.max_clusters_per_order;
    if (cap == 0 || level.size() <= cap) return;
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(level.size());
    for (std::size_t k = 0; k < level.size(); ++k) {
      double score;
      if (policy.strongest_first) {
        score = weight(level[k]);
      } else {
        // most compact first: smallest extent around the defect
        score = 0.0;
        for (auto i : level[k].indices) score = std::max(score, bath[i].position.norm());
        score = -score;
      }
      ranked.emplace_back(score, k);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
    std::vector<Cluster> kept;
    kept.reserve(cap);
    for (std::size_t k = 0; k < cap; ++k) kept.push_back(std::move(level[ranked[k].second]));
    std::sort(kept.begin(), kept.end());
    level = std::move(kept);
  };

  std::vector<char> in_bath(bath.size(), 0);
  std::vector<Cluster> level;
  for (std::size_t i = 0; i < bath.size(); ++i)
    if (bath[i].position.norm() <= policy.r_bath) {
      in_bath[i] = 1;
      level.emplace_back(std::vector<std::size_t>{i});
    }
  truncate(level);
  std::vector<Cluster> out = level;
  if (policy.max_order == 1 || level.empty()) return out;

  NeighborGrid grid(bath, policy.r_connect);
  std::vector<std::vector<std::size_t>> neighbors(bath.size());
  for (std::size_t i = 0; i < bath.size(); ++i) {
    if (!in_bath[i]) continue;
    for (auto j : grid.within(i, policy.r_connect))
      if (in_bath[j]) neighbors[i].push_back(j);
  }

  for (int order = 2; order <= policy.max_order; ++order) {
    std::set<std::vector<std::size_t>> candidates;
    for (const auto& c : level) {
      for (auto member : c.indices) {
        for (auto j : neighbors[member]) {
          if (std::binary_search(c.indices.begin(), c.indices.end(), j)) continue;
          if (order == 2 && j < member) continue;
          std::vector<std::size_t> grown = c.indices;
          grown.insert(std::upper_bound(grown.begin(), grown.end(), j), j);
          candidates.insert(std::move(grown));
        }
      }
    }
    std::vector<Cluster> next;
    next.reserve(candidates.size());
    for (const auto& idx : candidates) next.emplace_back(idx);
    truncate(next);
    if (next.empty()) break;
    out.insert(out.end(), next.begin(), next.end());
    level = std::move(next);
  }
  return out;
}

std::vector<Cluster> downward_closure(std::span<const Cluster> clusters) {
  std::set<Cluster> all(clusters.begin(), clusters.end());
  for (const auto& c : clusters) {
    const int n = c.order();
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
      std::vector<std::size_t> sub;
      for (int k = 0; k < n; ++k)
        if (mask & (1u << k)) sub.push_back(c.indices[k]);
      all.insert(Cluster(std::move(sub)));
    }
  }
  std::vector<Cluster> out(all.begin(), all.end());
  std::stable_sort(out.begin(), out.end(), [](const Cluster& l, const Cluster& r) { return l.order() < r.order(); });
  return out;
}

BathConfiguration sample_configuration(const SystemInputs& system, std::mt19937_64& rng) {
  system.bath_state.validate();
  const auto& bath = system.bath;
  BathConfiguration cfg;
  cfg.states.reserve(bath.size());
  cfg.polarization.reserve(bath.size());
  struct Cached {
    RVector weights;
    CMatrix vectors;
    std::vector<Vec3> means;
  };
  std::map<std::pair<const SpinInitialState*, std::string>, Cached> cache;
  for (std::size_t i = 0; i < bath.size(); ++i) {
    const auto& state = system.bath_state.of(i);
    auto key = std::make_pair(&state, bath[i].species.label);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const CMatrix rho = state.density_matrix(bath[i].species);
      const auto I = SpinMatrices::make(bath[i].species.twice_spin);
      Cached c;
      if (rho.isDiagonal(1e-14)) {
        // keep the m basis; a degenerate solver basis would be arbitrary
        c.weights = rho.diagonal().real().cwiseMax(0.0);
        c.vectors = CMatrix::Identity(rho.rows(), rho.cols());
      } else {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(rho);
        c.weights = es.eigenvalues().cwiseMax(0.0);
        c.vectors = es.eigenvectors();
      }
      for (long k = 0; k < c.vectors.cols(); ++k) {
        const CVector v = c.vectors.col(k);
        c.means.emplace_back(v.dot(I.x * v).real(), v.dot(I.y * v).real(), v.dot(I.z * v).real());
      }
      it = cache.emplace(key, std::move(c)).first;
    }
    const auto& c = it->second;
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * c.weights.sum();
    long k = 0;
    while (k + 1 < c.weights.size() && u >= c.weights(k)) u -= c.weights(k++);
    while (c.weights(k) <= 0.0 && k > 0) --k;
    cfg.states.push_back(c.vectors.col(k));
    cfg.polarization.push_back(c.means[k]);
    cfg.overhauser += bath[i].A * c.means[k];
  }
  cfg.nuclear_field.assign(bath.size(), Vec3::Zero());
  for (const auto& p : pair_couplings(bath, system.r_pair)) {
    cfg.nuclear_field[p.i] += p.J * cfg.polarization[p.j];
    cfg.nuclear_field[p.j] += p.J.transpose() * cfg.polarization[p.i];
  }
  return cfg;
}

std::vector<cplx> hahn_echo_cluster_curve(const Cluster& cluster, const SystemInputs& system,
                                          std::span<const double> times) {
  const BathConfiguration* cfg = system.configuration;
  if (cfg && (cfg->states.size() != system.bath.size() || cfg->nuclear_field.size() != system.bath.size()))
    throw ValidationError("bath configuration does not match the bath");
  std::vector<BathSpin> spins;
  std::vector<CMatrix> rho;
  spins.reserve(cluster.indices.size());
  for (auto i : cluster.indices) {
    if (i >= system.bath.size()) throw ValidationError("cluster index " + std::to_string(i) + " outside the bath");
    spins.push_back(system.bath[i]);
    if (cfg) {
      rho.push_back(cfg->states[i] * cfg->states[i].adjoint());
    } else {
      const auto& state = system.bath_state.of(i);
      state.validate();
      rho.push_back(state.density_matrix(system.bath[i].species));
    }
  }
  std::vector<PairCoupling> pairs;
  for (std::size_t a = 0; a < spins.size(); ++a)
    for (std::size_t b = a + 1; b < spins.size(); ++b)
      if ((spins[a].position - spins[b].position).norm() <= system.r_pair)
        pairs.push_back(dipolar_tensor(spins[a], spins[b], a, b));
  CMatrix h = build_cluster_hamiltonian(system.central, spins, pairs, system.field, system.mode,
                                        HamiltonianOptions{system.max_dim});
  if (!cfg) return hahn_echo_curve(h, electron_qubit(system.central, system.field), rho, times);

  // static fields of the spins outside the cluster
  Vec3 he = cfg->overhauser;
  std::vector<Vec3> hn;
  for (auto i : cluster.indices) {
    he -= system.bath[i].A * cfg->polarization[i];
    hn.push_back(cfg->nuclear_field[i]);
  }
  for (const auto& p : pairs) {
    hn[p.i] -= p.J * cfg->polarization[cluster.indices[p.j]];
    hn[p.j] -= p.J.transpose() * cfg->polarization[cluster.indices[p.i]];
  }
  std::vector<int> dims{kCentralSpinDim};
  for (const auto& sp : spins) dims.push_back(sp.species.dim());
  const ProductSpace space(dims);
  space.add_local(h, 0, overhauser_term(he, system.mode));
  for (std::size_t k = 0; k < spins.size(); ++k) {
    const auto I = SpinMatrices::make(spins[k].species.twice_spin);
    space.add_local(h, static_cast<int>(k) + 1, hn[k].x() * I.x + hn[k].y() * I.y + hn[k].z() * I.z);
  }
  // the qubit is defined by the electron in the full static field of this configuration
  const CMatrix h_e = electron_hamiltonian(system.central, system.field) + overhauser_term(cfg->overhauser, system.mode);
  return hahn_echo_curve(h, electron_qubit(system.central, h_e), rho, times);
}

std::vector<cplx> electron_only_curve(const SystemInputs& system, std::span<const double> times) {
  return hahn_echo_cluster_curve(Cluster{}, system, times);
}

IrreducibleFactorizer::IrreducibleFactorizer(std::vector<cplx> l0) : l0_(std::move(l0)) {}

const ClusterContribution* IrreducibleFactorizer::find(const Cluster& cluster) const {
  auto it = done_.find(cluster);
  return it == done_.end() ? nullptr : &it->second;
}

const ClusterContribution& IrreducibleFactorizer::add(const Cluster& cluster, std::span<const cplx> raw) {
  if (raw.size() != l0_.size()) throw ValidationError("cluster curve and l0 sample counts differ");
  std::vector<cplx> denominator = l0_;
  const int n = cluster.order();
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    std::vector<std::size_t> sub;
    for (int k = 0; k < n; ++k)
      if (mask & (1u << k)) sub.push_back(cluster.indices[k]);
    const Cluster sc(std::move(sub));
    const auto* c = find(sc);
    if (!c) throw DependencyError("sub-cluster " + describe(sc) + " of " + describe(cluster) + " has not been evaluated");
    for (std::size_t t = 0; t < denominator.size(); ++t) denominator[t] *= c->curve[t];
  }
  ClusterContribution out{cluster, std::vector<cplx>(raw.size()), false};
  cplx held = 1.0;
  for (std::size_t t = 0; t < raw.size(); ++t) {
    const double den = std::abs(denominator[t]);
    const bool unstable = den < kNoiseFloor || std::abs(raw[t]) > kStableRatio * den;
    if (den < kDivisionFloor && unstable) {
      out.curve[t] = held;
      out.degraded = true;
    } else {
      out.curve[t] = raw[t] / denominator[t];
      held = out.curve[t];
    }
  }
  return done_.emplace(cluster, std::move(out)).first->second;
}

ClusterContribution irreducible_contribution(const Cluster& cluster,
                                             const std::map<Cluster, std::vector<cplx>>& raw_curves,
                                             std::span<const cplx> l0) {
  const Cluster target[] = {cluster};
  const auto order = downward_closure(target);
  IrreducibleFactorizer factorizer(std::vector<cplx>(l0.begin(), l0.end()));
  for (const auto& c : order) {
    auto it = raw_curves.find(c);
    if (it == raw_curves.end()) throw DependencyError("missing raw curve for sub-cluster " + describe(c));
    factorizer.add(c, it->second);
  }
  return *factorizer.find(cluster);
}

namespace {

GcceResult sampled_gcce(const SystemInputs& system, std::span<const Cluster> clusters, std::span<const double> times,
                        const ClusterPolicy& policy, const GcceOptions& options) {
  std::mt19937_64 rng(policy.sampling_seed);
  const auto bare = electron_only_curve(system, times);
  GcceResult out;
  for (int s = 0; s < policy.bath_samples; ++s) {
    const BathConfiguration cfg = sample_configuration(system, rng);
    SystemInputs sys = system;
    sys.configuration = &cfg;
    GcceOptions opts = options;
    opts.keep_contributions = false;
    auto r = gcce_coherence(sys, clusters, times, opts);
    const auto l0 = electron_only_curve(sys, times);
    const double w = 1.0 / policy.bath_samples;
    if (s == 0) {
      out = r;
      for (auto& c : out.cumulative) std::fill(c.values.begin(), c.values.end(), cplx(0.0));
      out.census.degraded.assign(r.census.degraded.size(), 0);
      out.degraded_fraction = 0.0;
    }
    for (std::size_t n = 0; n < r.cumulative.size(); ++n)
      for (std::size_t t = 0; t < times.size(); ++t)
        out.cumulative[n].values[t] += w * r.cumulative[n].values[t] * l0[t] / bare[t];
    for (std::size_t n = 0; n < r.census.degraded.size(); ++n) out.census.degraded[n] += r.census.degraded[n];
    out.degraded_fraction += w * r.degraded_fraction;
  }
  for (std::size_t n = 0; n < out.cumulative.size(); ++n) {
    out.cumulative[n].raw_L0_magnitude = bare.empty() ? 0.0 : std::abs(bare.front());
    auto& f = out.order_factors[n];
    f.raw_L0_magnitude = out.cumulative[n].raw_L0_magnitude;
    for (std::size_t t = 0; t < times.size(); ++t) {
      const cplx prev = n == 0 ? cplx(1.0) : out.cumulative[n - 1].values[t];
      f.values[t] = std::abs(prev) > 0.0 ? out.cumulative[n].values[t] / prev : cplx(1.0);
    }
  }
  if (!out.cumulative.empty()) out.total = out.cumulative.back();
  return out;
}

}  // namespace

GcceResult gcce_coherence(const SystemInputs& system, const ClusterPolicy& policy, std::span<const double> times,
                          const GcceOptions& options) {
  policy.validate();
  const ClusterScorer scorer(system.bath, system.central, system.field, system.mode);
  const auto clusters = enumerate_clusters(system.bath, policy, &scorer);
  SystemInputs sys = system;
  sys.r_pair = policy.r_pair;
  sys.max_dim = policy.max_dim;
  auto result = policy.bath_samples > 0 && system.configuration == nullptr
                    ? sampled_gcce(sys, clusters, times, policy, options)
                    : gcce_coherence(sys, clusters, times, options);
  result.census.enumerated.assign(policy.max_order, 0);
  for (const auto& c : clusters) ++result.census.enumerated[c.order() - 1];
  if (result.order_factors.size() < static_cast<std::size_t>(policy.max_order)) {
    // orders with no clusters contribute a factor of one
    CoherenceCurve one = result.total;
    std::fill(one.values.begin(), one.values.end(), cplx(1.0));
    while (result.order_factors.size() < static_cast<std::size_t>(policy.max_order)) {
      result.order_factors.push_back(one);
      result.cumulative.push_back(result.cumulative.empty() ? one : result.cumulative.back());
      result.census.evaluated.push_back(0);
      result.census.degraded.push_back(0);
    }
  }
  return result;
}

GcceResult gcce_coherence(const SystemInputs& system, std::span<const Cluster> clusters,
                          std::span<const double> times, const GcceOptions& options) {
  system.central.validate();
  system.bath_state.validate();
  const auto all = downward_closure(clusters);
  int max_order = 0;
  for (const auto& c : all) max_order = std::max(max_order, c.order());

  std::vector<std::vector<cplx>> raw(all.size());
  parallel_for(all.size(), options.threads, [&](std::size_t k) { raw[k] = hahn_echo_cluster_curve(all[k], system, times); });

  const auto l0 = electron_only_curve(system, times);
  IrreducibleFactorizer factorizer(l0);

  GcceResult result;
  const std::vector<double> tgrid(times.begin(), times.end());
  auto make_curve = [&] {
    CoherenceCurve c;
    c.times = tgrid;
    c.values.assign(tgrid.size(), cplx(1.0));
    c.normalized = true;
    c.raw_L0_magnitude = l0.empty() ? 0.0 : std::abs(l0.front());
    return c;
  };
  result.order_factors.assign(max_order, make_curve());
  result.census.evaluated.assign(max_order, 0);
  result.census.degraded.assign(max_order, 0);
  result.census.enumerated.assign(max_order, 0);
  for (const auto& c : clusters) ++result.census.enumerated[c.order() - 1];

  std::size_t degraded = 0;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const auto& contrib = factorizer.add(all[k], raw[k]);
    const int n = all[k].order();
    auto& factor = result.order_factors[n - 1].values;
    for (std::size_t t = 0; t < factor.size(); ++t) factor[t] *= contrib.curve[t];
    ++result.census.evaluated[n - 1];
    if (contrib.degraded) {
      ++degraded;
      ++result.census.degraded[n - 1];
    }
    if (options.keep_contributions) result.contributions.push_back(contrib);
  }

  result.total = make_curve();
  for (int n = 0; n < max_order; ++n) {
    for (std::size_t t = 0; t < result.total.values.size(); ++t) result.total.values[t] *= result.order_factors[n].values[t];
    result.cumulative.push_back(result.total);
  }
  result.degraded_fraction = all.empty() ? 0.0 : static_cast<double>(degraded) / static_cast<double>(all.size());
  return result;
}

}  // namespace vbdecoh

#include <benchmark/benchmark.h>

#include <random>

#include "random_bath.hpp"
#include "vbdecoh/bath.hpp"
#include "vbdecoh/cce.hpp"
#include "vbdecoh/oracle.hpp"

using namespace vbdecoh;

namespace {

std::vector<BathSpin> lattice_bath(double radius) {
  const LatticeSpec l{.radius = radius};
  return generate_bath(l, IsotopeConfig{}, make_synthetic_dataset(l));
}

void BM_ClusterHamiltonian(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto bath = testing::random_bath(static_cast<int>(state.range(0)), rng);
  const auto pairs = pair_couplings(bath, 10.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        build_cluster_hamiltonian(CentralSpinParams{}, bath, pairs, MagneticField::along_c(50.0), HamiltonianMode::full));
}
BENCHMARK(BM_ClusterHamiltonian)->DenseRange(1, 4);

void BM_ClusterEcho(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto bath = testing::random_bath(static_cast<int>(state.range(0)), rng);
  SystemInputs sys;
  sys.bath = bath;
  sys.field = MagneticField::along_c(50.0);
  std::vector<std::size_t> all(bath.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const Cluster c(all);
  const auto times = uniform_times(1.0, 201);
  for (auto _ : state) benchmark::DoNotOptimize(hahn_echo_cluster_curve(c, sys, times));
}
BENCHMARK(BM_ClusterEcho)->DenseRange(1, 4)->Unit(benchmark::kMicrosecond);

void BM_Enumerate(benchmark::State& state) {
  const auto bath = lattice_bath(static_cast<double>(state.range(0)));
  ClusterPolicy p;
  p.max_order = 3;
  p.r_bath = static_cast<double>(state.range(0));
  p.max_clusters_per_order = 5000;
  const ClusterScorer scorer(bath, CentralSpinParams{}, MagneticField::along_c(3000.0), HamiltonianMode::full);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_clusters(bath, p, &scorer));
}
BENCHMARK(BM_Enumerate)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_GcceOrder2(benchmark::State& state) {
  const auto bath = lattice_bath(8.0);
  SystemInputs sys;
  sys.bath = bath;
  sys.field = MagneticField::along_c(3000.0);
  ClusterPolicy p;
  p.max_order = 2;
  p.r_bath = 8.0;
  p.r_connect = 4.0;
  const auto times = uniform_times(50.0, 101);
  for (auto _ : state) benchmark::DoNotOptimize(gcce_coherence(sys, p, times));
}
BENCHMARK(BM_GcceOrder2)->Unit(benchmark::kMillisecond);

void BM_ExactOracle(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto bath = testing::random_bath(static_cast<int>(state.range(0)), rng);
  const auto pairs = pair_couplings(bath, 10.0);
  const std::vector<SpinInitialState> states(bath.size());
  const auto times = uniform_times(1.0, 101);
  for (auto _ : state)
    benchmark::DoNotOptimize(exact_coherence(CentralSpinParams{}, bath, pairs, MagneticField::along_c(50.0),
                                             HamiltonianMode::full, states, times));
}
BENCHMARK(BM_ExactOracle)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

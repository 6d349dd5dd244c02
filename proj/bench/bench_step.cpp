// One Milstein step of the linear mean-field system (full O(N^2) Lambda2 sum):
// OpenMP kernel at 1 and all threads vs the serial reference formula.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "mvsde/scheme.hpp"

namespace {

constexpr std::size_t kSubsteps = 8;

struct Fixture {
    mvsde::LinearMeanFieldModel model{-1.0, 0.5, 0.2, 0.1};
    mvsde::BrownianLattice lattice;
    mvsde::SimState state;

    explicit Fixture(std::size_t n)
        : lattice(1, n, 1, kSubsteps, 1.0),
          state{0.0, 0, 1, mvsde::sample_initial(mvsde::InitialLaw::gaussian(0.0, 1.0), 1, n, 1)} {}
};

void run_kernel(benchmark::State& st, int threads) {
    Fixture f(static_cast<std::size_t>(st.range(0)));
    mvsde::StepOptions opts;
    opts.threads = threads;
    const auto noise = f.lattice.step_noise(1, 0);
    for (auto _ : st) benchmark::DoNotOptimize(mvsde::advance(f.model, f.state, noise, 1, opts));
    st.SetComplexityN(st.range(0));
}

void BM_Serial(benchmark::State& st) { run_kernel(st, 1); }
void BM_OpenMP(benchmark::State& st) { run_kernel(st, omp_get_max_threads()); }

void BM_Reference(benchmark::State& st) {
    Fixture f(static_cast<std::size_t>(st.range(0)));
    const mvsde::StepOptions opts;
    for (auto _ : st) benchmark::DoNotOptimize(mvsde::reference::advance(f.model, f.state, f.lattice, 1, opts));
    st.SetComplexityN(st.range(0));
}

}  // namespace

BENCHMARK(BM_Serial)->RangeMultiplier(2)->Range(64, 1024)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_OpenMP)->RangeMultiplier(2)->Range(64, 1024)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_Reference)->RangeMultiplier(2)->Range(64, 256)->Complexity(benchmark::oNSquared);

BENCHMARK_MAIN();

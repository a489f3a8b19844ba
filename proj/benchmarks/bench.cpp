#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "beablesim/beable.hpp"
#include "beablesim/experiments.hpp"
#include "beablesim/hilbert.hpp"
#include "beablesim/measurement.hpp"

using namespace beablesim;

namespace {

HermitianOperator dense_hermitian(int dim, std::uint64_t seed) {
    RandomStream gen(seed);
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            m(i, j) = Complex(gen.uniform() - 0.5, gen.uniform() - 0.5);
    Matrix h = 0.5 * (m + m.adjoint());
    return HermitianOperator{h};
}

StateVector dense_state(int dim, std::uint64_t seed) {
    RandomStream gen(seed);
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = Complex(gen.uniform() - 0.5, gen.uniform() - 0.5);
    return StateVector::normalized(v);
}

void bm_jump_rates(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    const HermitianOperator h = dense_hermitian(dim, 1);
    const StateVector psi = dense_state(dim, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(jump_rates(psi, h));
    }
}
BENCHMARK(bm_jump_rates)->Arg(4)->Arg(16)->Arg(64);

void bm_matrix_exponential(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    const HermitianOperator h = dense_hermitian(dim, 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(matrix_exponential_unitary(h, 1.7));
    }
}
BENCHMARK(bm_matrix_exponential)->Arg(4)->Arg(16)->Arg(64);

void bm_trajectory_four_pulse(benchmark::State& state) {
    const Scenario sc = scenario_example2(1.0);
    std::uint64_t trial = 0;
    for (auto _ : state) {
        RandomStream rng = derive_stream(11, trial++);
        benchmark::DoNotOptimize(run_measurement_trial(*sc.measurement,
                                                       sc.default_system_coefficients,
                                                       InitialBeableLaw::fixed(0), 0.005, rng));
    }
}
BENCHMARK(bm_trajectory_four_pulse);

void bm_faithfulness_run(benchmark::State& state) {
    const Scenario sc = scenario_example1(1.0);
    const std::vector<Complex> coeffs{Complex(0.6, 0), Complex(0.8, 0)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(faithfulness_experiment(*sc.measurement, coeffs,
                                                         InitialBeableLaw::born(), 100, 0.005, 5));
    }
}
BENCHMARK(bm_faithfulness_run);

void bm_ensemble_distribution(benchmark::State& state) {
    const Scenario sc = scenario_forgetting(1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ensemble_distribution(sc.initial_state, InitialBeableLaw::born(),
                                                       sc.schedule, 8.0, 0.01, 200, 7));
    }
}
BENCHMARK(bm_ensemble_distribution);

} // namespace

BENCHMARK_MAIN();

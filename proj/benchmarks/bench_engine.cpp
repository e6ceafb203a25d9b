#include <benchmark/benchmark.h>

#include <cmath>
#include <filesystem>

#include "nvpd/calibration.hpp"
#include "nvpd/io.hpp"

using namespace nvpd;

namespace {

SimConfig cfg(int bins = 11, int ns = 0) {
    SimConfig c = load_config(std::filesystem::path(NVPD_SOURCE_DIR) / "configs" / "default.json");
    if (bins != c.mesh.n_bins || ns) {
        std::vector<Placement> pl = {{bins / 2, DefectKind::NV, 1}};
        if (ns) pl.push_back({bins / 2, DefectKind::Ns, ns});
        c.mesh = build_mesh(c.mesh.transport.gap, bins, pl, c.mesh.transport);
    }
    return c;
}

} // namespace

static void BM_Rhs(benchmark::State& st) {
    const auto c = cfg(static_cast<int>(st.range(0)), 10);
    const auto r = build_rate_set(c.preset, 1.0, true);
    auto s = run_to_steady_state(initial_state(c.mesh), c).state;
    for (auto _ : st) benchmark::DoNotOptimize(assemble_rhs(s, r, c.mesh));
}
BENCHMARK(BM_Rhs)->Arg(1)->Arg(11)->Arg(23);

static void BM_SteadyState(benchmark::State& st) {
    const auto c = cfg(static_cast<int>(st.range(0)), static_cast<int>(st.range(1)));
    for (auto _ : st) benchmark::DoNotOptimize(run_to_steady_state(initial_state(c.mesh), c));
}
BENCHMARK(BM_SteadyState)->Args({11, 0})->Args({11, 10})->Args({23, 0})->Unit(benchmark::kMillisecond);

static void BM_Oracle(benchmark::State& st) {
    const auto c = cfg();
    const auto r = build_rate_set(c.preset, 1.0, false);
    for (auto _ : st) benchmark::DoNotOptimize(single_bin_steady_oracle(r, BinDefects{1, 10, 0}));
}
BENCHMARK(BM_Oracle);

static void BM_PowerSweep(benchmark::State& st) {
    const auto c = cfg();
    std::vector<double> p;
    for (int i = 0; i < 10; ++i) p.push_back(0.05 * std::pow(100.0, i / 9.0));
    for (auto _ : st) benchmark::DoNotOptimize(power_sweep(c, p, 1));
}
BENCHMARK(BM_PowerSweep)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK_MAIN();

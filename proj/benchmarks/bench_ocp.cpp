#include <benchmark/benchmark.h>

#include "sfl/aircraft.hpp"
#include "sfl/closed_loop.hpp"
#include "sfl/config.hpp"
#include "sfl/ocp.hpp"

using namespace sfl;

namespace {

struct Fixture {
    VarxModel m = aircraft_varx();
    DisturbanceSpec spec = aircraft_uniform_disturbance();
    ClosedLoopConfig cfg = to_closed_loop_config(aircraft_config());
    JointBasis basis = build_joint_basis(aircraft_uniform_disturbance(), 10);
    OfflineData data;
    RealTrajectory init;

    Fixture() {
        data = prepare_offline_data(m, spec, cfg, 1);
        init.start_time = -1;
        init.u = Eigen::MatrixXd::Zero(1, 2);
        init.y = cfg.init_mean.replicate(1, 2);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

void bench_scheme(benchmark::State& state, Scheme scheme) {
    Fixture& f = fixture();
    const RealTrajectory& rec = scheme == Scheme::II ? f.data.disturbed : f.data.undisturbed;
    RealTrajectory init = f.init;
    if (scheme == Scheme::II) init.w = Eigen::MatrixXd::Zero(3, 2);
    for (auto _ : state) {
        const OcpProblem p = build_ocp(scheme, rec, 2, 10, f.basis, f.spec, init,
                                       f.cfg.weights, f.cfg.rows, f.cfg.build);
        const OcpSolution sol = solve_ocp(p, f.cfg.solver);
        benchmark::DoNotOptimize(sol.cost);
    }
}

void bm_build_solve_shortened(benchmark::State& state) { bench_scheme(state, Scheme::I); }
void bm_build_solve_full_stack(benchmark::State& state) { bench_scheme(state, Scheme::II); }

BENCHMARK(bm_build_solve_shortened)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_build_solve_full_stack)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();

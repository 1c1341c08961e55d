#include <doctest.h>

#include <cmath>

#include "condload/engine.hpp"

using namespace condload;

namespace {

SimulationParams tiny(double gamma, LoadingMode mode, int max_shell)
{
    SimulationParams p;
    p.trap.m_max = 2;
    p.trap.virtual_extra = 0;
    p.loading = {gamma, mode, max_shell};
    p.delta = 0.0;
    p.t_end = 1.0;
    return p;
}

SimulationParams loading_run(double t_end, std::uint64_t seed)
{
    SimulationParams p;
    p.trap.m_max = 20;
    p.trap.virtual_extra = 5;
    p.loading = {0.02, LoadingMode::PerStateErgodic, -1};
    p.delta = 0.05;
    p.outcoupling = OutcouplingPolicy::randomized(1.17, 0.05, 3.0, 20.0);
    p.t_end = t_end;
    p.sample_grid = uniform_grid(t_end, 20);
    p.seed = seed;
    p.check_invariants = true;
    return p;
}

}  // namespace

TEST_CASE("single-channel waiting time has mean 1/r")
{
    const auto p = tiny(2.0, LoadingMode::PerShell, 0);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        KineticSimulator sim(p, static_cast<std::uint64_t>(i));
        const auto r = sim.step(std::numeric_limits<double>::infinity());
        CHECK_MESSAGE(r.event.type == EventType::Load, "only loading is possible");
        sum += r.dt;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("two channels with rates 1 and 3 are chosen 25/75")
{
    // per-state loading of an empty trap: shell 0 has weight 1, shell 1 weight 3
    const auto p = tiny(1.0, LoadingMode::PerStateErgodic, 1);
    const int n = 100000;
    int upper = 0;
    for (int i = 0; i < n; ++i) {
        KineticSimulator sim(p, static_cast<std::uint64_t>(i));
        upper += sim.step(std::numeric_limits<double>::infinity()).event.shell == 1;
    }
    CHECK(std::abs(upper - 0.75 * n) <= 3.0 * std::sqrt(n * 0.75 * 0.25));
}

TEST_CASE("zero total rate jumps to the horizon")
{
    auto p = tiny(0.0, LoadingMode::PerShell, -1);
    p.initial_counts = {1, 2, 0};
    KineticSimulator sim(p, 0);
    const auto before = sim.state();
    const auto r = sim.step(7.5);
    CHECK(r.event.type == EventType::None);
    CHECK(sim.time() == 7.5);
    CHECK(sim.state() == before);
}

TEST_CASE("no loading and no collisions leave every observable at zero")
{
    auto p = tiny(0.0, LoadingMode::PerShell, -1);
    p.t_end = 50.0;
    p.sample_grid = uniform_grid(50.0, 10);
    const auto traj = run(p);
    REQUIRE(traj.samples.size() == 11);
    for (const auto& s : traj.samples) {
        CHECK(s.N == 0);
        CHECK(s.N0 == 0);
        CHECK(s.fraction == 0.0);
        CHECK(s.events_total == 0);
        CHECK(s.cum_evaporated == 0);
    }
}

TEST_CASE("same seed gives identical trajectories")
{
    const auto p = loading_run(400.0, 17);
    const auto a = run(p, 2);
    const auto b = run(p, 2);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].N == b.samples[i].N);
        CHECK(a.samples[i].N0 == b.samples[i].N0);
        CHECK(a.samples[i].events_total == b.samples[i].events_total);
    }
    CHECK(a.final_state == b.final_state);
    CHECK(a.final_state.total() > 0);

    const auto c = run(p, 3);
    CHECK_FALSE(c.final_state == a.final_state);
}

TEST_CASE("ledger balances the atom count")
{
    const auto t = run(loading_run(600.0, 5));
    for (const auto& s : t.samples)
        CHECK(s.N == s.cum_loaded - s.cum_not_trapped - s.cum_evaporated - s.cum_outcoupled);
    CHECK(t.ledger.outcoupled > 0);
    CHECK(t.final_state.consistent());
}

TEST_CASE("ensemble reduction is independent of thread count")
{
    auto p = loading_run(300.0, 23);
    p.realizations = 6;
    p.threads = 1;
    const auto serial = ensemble(p, true);
    p.threads = 4;
    const auto parallel = ensemble(p, true);
    CHECK(serial.N0.mean == parallel.N0.mean);
    CHECK(serial.N.sem == parallel.N.sem);
    for (std::size_t r = 0; r < serial.replicas.size(); ++r)
        CHECK(serial.replicas[r].final_state == parallel.replicas[r].final_state);

    p.realizations = 1;
    const auto one = ensemble(p, true);
    const auto single = run(p, 0);
    for (std::size_t i = 0; i < single.samples.size(); ++i)
        CHECK(one.N.mean[i] == static_cast<double>(single.samples[i].N));
}

TEST_CASE("birth process: condensate mean and variance without collisions")
{
    SimulationParams p;
    p.trap.m_max = 4;
    p.trap.virtual_extra = 0;
    p.loading = {1.0, LoadingMode::PerShell, 0};
    p.delta = 0.0;
    p.t_end = 2.0;
    p.sample_grid = {0.5, 1.0, 2.0};
    p.realizations = 3000;
    p.seed = 404;
    const auto e = ensemble(p, true);
    for (std::size_t k = 0; k < p.sample_grid.size(); ++k) {
        const double x = std::exp(p.sample_grid[k]);
        CHECK(std::abs(e.N0.mean[k] - (x - 1.0)) <= 3.0 * e.N0.sem[k]);

        // sample variance against x (x - 1), with its own standard error
        double m2 = 0.0, m4 = 0.0;
        const double n = static_cast<double>(e.replicas.size());
        for (const auto& r : e.replicas) {
            const double d = static_cast<double>(r.samples[k].N0) - e.N0.mean[k];
            m2 += d * d / n;
            m4 += d * d * d * d / n;
        }
        const double var = m2 * n / (n - 1.0);
        const double se = std::sqrt((m4 - m2 * m2) / n);
        CHECK(std::abs(var - x * (x - 1.0)) <= 3.0 * se);
    }
}

TEST_CASE("parameter validation")
{
    SimulationParams p;
    p.t_end = -1.0;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p.t_end = 10.0;
    p.realizations = 0;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p.realizations = 1;
    p.initial_counts = {1, 2};
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
}

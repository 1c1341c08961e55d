#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "condload/collision.hpp"
#include "condload/engine.hpp"
#include "condload/pump_loss.hpp"

using namespace condload;

TEST_CASE("loading rates in both modes")
{
    ShellOccupancy empty(6);
    LoadingConfig shell{0.2, LoadingMode::PerShell, -1};
    LoadingConfig ergodic{0.2, LoadingMode::PerStateErgodic, -1};
    CHECK(loading_rate(empty, shell, 0) == doctest::Approx(0.2));
    CHECK(loading_rate(empty, ergodic, 0) == doctest::Approx(0.2));
    CHECK(loading_rate(empty, ergodic, 2) == doctest::Approx(6 * 0.2));
    CHECK(loading_rate(empty, shell, 2) == doctest::Approx(0.2));

    ShellOccupancy full(std::vector<std::int64_t>{100, 0, 0});
    CHECK(loading_rate(full, shell, 0) == doctest::Approx(101 * 0.2));

    LoadingConfig capped{0.2, LoadingMode::PerShell, 1};
    const auto rates = loading_rates(empty, capped);
    CHECK(rates[1] == doctest::Approx(0.2));
    CHECK(rates[2] == 0.0);

    CHECK(parse_loading_mode(to_string(LoadingMode::PerStateErgodic)) == LoadingMode::PerStateErgodic);
    CHECK_THROWS(parse_loading_mode("per-atom"));
    CHECK_THROWS((LoadingConfig{-1.0, LoadingMode::PerShell, -1}.validate()));
}

TEST_CASE("evaporation above the cutoff")
{
    const int m_max = 8;
    ShellOccupancy s(m_max + 5);
    s.add(3, 4);
    CHECK(apply_evaporation(s, m_max) == 0);

    ShellOccupancy hot(m_max + 5);
    hot.add(m_max, 2);
    apply_collision(hot, {m_max, m_max, m_max - 3, m_max + 3});
    CHECK(apply_evaporation(hot, m_max) == 1);
    CHECK(hot.total() == 1);
    CHECK(hot[m_max - 3] == 1);
}

TEST_CASE("engine traces: evaporated product and untrapped load")
{
    SimulationParams p;
    p.trap.m_max = 8;
    p.trap.virtual_extra = 6;
    p.loading.gamma_eff = 0.0;
    p.delta = 1.0;
    p.t_end = 1.0;
    p.initial_counts.assign(static_cast<std::size_t>(p.trap.shell_count()), 0);
    p.initial_counts[8] = 2;
    KineticSimulator sim(p, 0);

    sim.apply({EventType::Collision, {8, 8, 5, 11}, -1});
    CHECK(sim.ledger().evaporated == 1);
    CHECK(sim.state().total() == 1);
    CHECK(sim.state()[5] == 1);

    sim.apply({EventType::Load, {}, 8 + 5});
    CHECK(sim.ledger().not_trapped == 1);
    CHECK(sim.state().total() == 1);
    sim.apply({EventType::Load, {}, 2});
    CHECK(sim.state()[2] == 1);
    CHECK(sim.ledger().loaded == 2);
}

TEST_CASE("outcoupling rates")
{
    const double g = 0.5;
    CHECK(outcoupling_rate(OutcouplingPolicy::constant(1.14 * g), 1.0, 0, g) == 0.0);
    CHECK(outcoupling_rate(OutcouplingPolicy::constant(1.14 * g), 1.0, 950, g) ==
          doctest::Approx(1083.0 * g));
    CHECK(outcoupling_rate(OutcouplingPolicy::constant(1.0, 5.0), 4.0, 10, g) == 0.0);
    CHECK(outcoupling_rate(OutcouplingPolicy::off(), 4.0, 10, g) == 0.0);

    const auto rnd = OutcouplingPolicy::randomized(1.17, 0.05, 10.0, 0.0);
    OutcouplingSchedule sched(rnd, g, RandomStream(5, 0, StreamPurpose::Outcoupling));
    CHECK_FALSE(sched.active());
    CHECK(sched.next_boundary() == 0.0);
    for (int i = 0; i < 1000; ++i) {
        sched.cross_boundary();
        const double ratio = sched.gamma_out() / g;
        CHECK(ratio >= 1.12 - 1e-12);
        CHECK(ratio <= 1.17 + 1e-12);
        CHECK(sched.next_boundary() == doctest::Approx(10.0 * (i + 1)));
    }
    CHECK_THROWS(OutcouplingPolicy::randomized(1.17, 2.0, 10.0).validate());
}

TEST_CASE("resampled fraction is uniform on [0, f_max]")
{
    const auto rnd = OutcouplingPolicy::randomized(1.17, 0.05, 1.0, 0.0);
    OutcouplingSchedule sched(rnd, 1.0, RandomStream(99, 3, StreamPurpose::Outcoupling));
    const int n = 20000;
    std::vector<double> f;
    for (int i = 0; i < n; ++i) {
        sched.cross_boundary();
        f.push_back(sched.f() / 0.05);
    }
    std::sort(f.begin(), f.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i)
        d = std::max({d, std::abs(f[i] - static_cast<double>(i) / n), std::abs(f[i] - (i + 1.0) / n)});
    // 1% critical value of the Kolmogorov statistic
    CHECK(d * std::sqrt(static_cast<double>(n)) < 1.63);
}

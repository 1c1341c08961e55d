#include <doctest.h>

#include <cmath>
#include <complex>
#include <numeric>

#include "condload/bre.hpp"
#include "condload/units.hpp"

using namespace condload;

namespace {

// Hermite functions phi_0..phi_n at x by the stable three-term recursion.
std::vector<double> hermite_functions(int n, double x)
{
    std::vector<double> h(static_cast<std::size_t>(n) + 1);
    h[0] = std::pow(M_PI, -0.25) * std::exp(-x * x / 2);
    if (n > 0) h[1] = std::sqrt(2.0) * x * h[0];
    for (int k = 2; k <= n; ++k)
        h[k] = std::sqrt(2.0 / k) * x * h[k - 1] - std::sqrt((k - 1.0) / k) * h[k - 2];
    return h;
}

std::complex<double> overlap_by_quadrature(int l, int m, double eta)
{
    const double k = eta * std::sqrt(2.0);
    const int n = 40000;
    const double a = -14.0, b = 14.0, dx = (b - a) / n;
    std::complex<double> sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = a + i * dx;
        const auto h = hermite_functions(std::max(l, m), x);
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        sum += w * h[l] * std::exp(std::complex<double>(0.0, k * x)) * h[m];
    }
    return sum * dx;
}

double slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("Franck-Condon factors")
{
    CHECK(std::abs(franck_condon(3, 3, 0.0) - 1.0) < 1e-15);
    CHECK(std::abs(franck_condon(2, 5, 0.0)) < 1e-15);
    CHECK(std::abs(franck_condon(1, 0, 0.5)) == doctest::Approx(0.5 * std::exp(-0.125)).epsilon(1e-12));
    CHECK(std::abs(franck_condon(1, 0, 0.5)) == doctest::Approx(0.4412).epsilon(1e-4));

    for (auto [l, m] : {std::pair{1, 0}, {0, 3}, {4, 2}, {5, 5}, {2, 7}}) {
        const auto q = overlap_by_quadrature(l, m, 0.45);
        const auto c = franck_condon(l, m, 0.45);
        CHECK(std::abs(c - q) < 1e-9);
    }
}

TEST_CASE("coupling tensor")
{
    const CouplingTensor flat(3, 3, 0.0);
    for (int l = 0; l < 3; ++l)
        for (int m = 0; m < 3; ++m)
            for (int mp = 0; mp < 3; ++mp)
                for (int lp = 0; lp < 3; ++lp)
                    CHECK(std::abs(flat(l, m, mp, lp) - ((l == m && lp == mp) ? 1.0 : 0.0)) < 1e-15);

    const CouplingTensor half(4, 6, 0.5);
    CHECK(half(0, 0, 0, 0).real() == doctest::Approx(std::exp(-0.25)).epsilon(1e-12));
    for (int l = 0; l < 4; ++l)
        for (int m = 0; m < 6; ++m)
            for (int mp = 0; mp < 6; ++mp)
                for (int lp = 0; lp < 4; ++lp) {
                    if (mp >= 4 || m >= 4) continue;
                    CHECK(std::abs(half(l, m, mp, lp) - std::conj(half(lp, mp, m, l))) < 1e-13);
                }

    CHECK(CouplingTensor(4, 60, 0.5).unitarity_defect() < 1e-10);
    CHECK(CouplingTensor(4, 4, 0.5).unitarity_defect() > 1e-4);
}

TEST_CASE("closed slow line leaves only the fast decay")
{
    LambdaSystemSpec spec;
    spec.gamma_eg = 0.0;
    const auto model = ReducedBREModel::condensate(3, 10, 1);
    const auto t = compute_order_terms(model, spec);
    CHECK(t.A0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.A1a == 0.0);
    CHECK(t.A1b == 0.0);
    CHECK(t.A2a() == 0.0);
    CHECK(t.A2b == 0.0);
}

TEST_CASE("two-channel competition")
{
    CHECK(competition_closed_form(1e-3, 0) == doctest::Approx(9.99e-4).epsilon(1e-3));

    LambdaSystemSpec spec;
    spec.gamma_eg = 1e-3;
    for (std::int64_t n0 : {0, 5, 40}) {
        const auto model = ReducedBREModel::condensate(1, n0, 0);
        const auto full = propagate_full(model, spec);
        CHECK(full.slow == doctest::Approx(competition_closed_form(1e-3, n0)).epsilon(1e-6));
        CHECK(full.total() == doctest::Approx(1.0).epsilon(1e-12));
        const auto t = compute_order_terms(model, spec);
        CHECK(t.A1a == doctest::Approx(1e-3 * (n0 + 1)).epsilon(1e-9));
        CHECK(t.A1a + t.A1b == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("bad reabsorption grows linearly with the condensate")
{
    LambdaSystemSpec spec;
    spec.gamma_eg = 1e-3;
    spec.eta = 0.3;
    std::vector<double> n0s{1, 3, 10, 30, 100}, ratio, ratio_full;
    for (double n0 : n0s) {
        const auto model = ReducedBREModel::condensate(4, static_cast<std::int64_t>(n0), 3);
        const auto t = compute_order_terms(model, spec);
        const auto f = propagate_full(model, spec);
        CHECK(t.A2a_bad > 0.0);
        CHECK(std::abs(t.residual()) < 1e-9);
        ratio.push_back(t.A2a_bad / t.A1a);
        ratio_full.push_back(f.fast_bad / f.slow);
    }
    CHECK(slope(n0s, ratio) == doctest::Approx(1.0).epsilon(0.1));
    CHECK(slope(n0s, ratio_full) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("scaling report")
{
    LambdaSystemSpec spec;
    spec.eta = 0.3;
    ScalingGrid grid;
    grid.epsilon = {1e-4, 1e-3, 6e-3};
    grid.n0 = {1, 10, 100};
    const auto r = scaling_report(grid, ReducedBREModel::condensate(4, 0, 3), spec);
    REQUIRE(r.points.size() == 9);
    int flagged = 0;
    for (const auto& p : r.points) {
        CHECK(p.outside_validity == (p.epsilon * p.n0 > 0.5));
        flagged += p.outside_validity;
    }
    CHECK(flagged == 1);  // eps N0 = 0.6
    CHECK(r.flagged == 1);
    CHECK(r.bad.eps_exponent == doctest::Approx(2.0).epsilon(0.05));
    CHECK(r.bad.n0_exponent == doctest::Approx(1.0).epsilon(0.05));
    CHECK(r.a1a.eps_exponent == doctest::Approx(1.0).epsilon(0.05));
    CHECK(r.competition_max_rel_error < 1e-6);
    CHECK(r.max_residual_bound < 1.0);
}

TEST_CASE("correlation kernel decays on the fast time scale")
{
    LambdaSystemSpec spec;
    spec.eta = 0.3;
    const std::vector<double> taus{0.0, 1.0, 5.0};
    const auto k = correlation_kernel(ReducedBREModel::condensate(4, 10, 3), spec, taus);
    REQUIRE(k.size() == 3);
    CHECK(k[0].magnitude == doctest::Approx(1.0));
    CHECK(k[1].magnitude < std::exp(-1.0));
    CHECK(k[2].magnitude <= std::exp(-5.0) + 1e-3);
}

TEST_CASE("power-law fit recovers exact exponents")
{
    std::vector<double> eps, n0, y;
    for (double e : {1e-4, 1e-3, 1e-2})
        for (double n : {1.0, 10.0, 100.0}) {
            eps.push_back(e);
            n0.push_back(n);
            y.push_back(0.3 * e * e * n);
        }
    const auto f = fit_power_law(eps, n0, y);
    CHECK(f.eps_exponent == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(f.n0_exponent == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::exp(f.log_prefactor) == doctest::Approx(0.3).epsilon(1e-10));
}

TEST_CASE("spec validation")
{
    LambdaSystemSpec spec;
    spec.gamma_er = 0.0;
    CHECK_THROWS_AS(spec.validate(), InvalidParameter);
    ReducedBREModel m = ReducedBREModel::condensate(2, 3, 5);
    CHECK_THROWS_AS(m.validate(), InvalidParameter);
}

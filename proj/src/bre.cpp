#include "condload/bre.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/laguerre.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "condload/units.hpp"

namespace condload {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

void LambdaSystemSpec::validate() const
{
    if (!(gamma_er > 0.0)) throw InvalidParameter("gamma_er must be positive");
    if (!(gamma_eg >= 0.0)) throw InvalidParameter("gamma_eg must be >= 0");
    if (!(Omega >= 0.0)) throw InvalidParameter("Omega must be >= 0");
    if (!(omega_trap >= 0.0)) throw InvalidParameter("omega_trap must be >= 0");
    if (!std::isfinite(delta) || !std::isfinite(eta)) throw InvalidParameter("delta and eta must be finite");
}

void ReducedBREModel::validate() const
{
    if (M_g < 1) throw InvalidParameter("M_g must be >= 1");
    if (static_cast<int>(occupations.size()) > M_g)
        throw InvalidParameter("more occupations than retained levels");
    for (auto n : occupations)
        if (n < 0) throw InvalidParameter("negative background occupation");
    if (initial_level < 0 || initial_level >= M_g) throw InvalidParameter("initial level out of range");
}

ReducedBREModel ReducedBREModel::condensate(int M_g, std::int64_t n0, int initial_level)
{
    ReducedBREModel m;
    m.M_g = M_g;
    m.occupations.assign(static_cast<std::size_t>(std::max(M_g, 1)), 0);
    m.occupations[0] = n0;
    m.initial_level = initial_level;
    return m;
}

std::complex<double> franck_condon(int l, int m, double eta)
{
    if (l < 0 || m < 0) throw InvalidParameter("negative oscillator level");
    const int lo = std::min(l, m);
    const int d = std::abs(l - m);
    const double x = eta * eta;
    if (eta == 0.0) return d == 0 ? cd(1.0, 0.0) : cd(0.0, 0.0);
    const double log_ratio = 0.5 * (std::lgamma(lo + 1.0) - std::lgamma(lo + d + 1.0));
    const double mag = std::exp(-0.5 * x + log_ratio) * std::pow(std::abs(eta), d) *
                       boost::math::laguerre(static_cast<unsigned>(lo), static_cast<unsigned>(d), x);
    // (i eta)^d = |eta|^d (i sign(eta))^d
    static const cd phases[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    int quarter = d % 4;
    if (eta < 0.0) quarter = (4 - quarter) % 4;
    return mag * phases[quarter];
}

CouplingTensor::CouplingTensor(int levels_e, int levels_g, double eta)
    : le_(levels_e), lg_(levels_g), eta_(eta)
{
    if (levels_e < 1 || levels_g < 1) throw InvalidParameter("coupling tensor needs levels");
    std::vector<cd> plus(static_cast<std::size_t>(le_ * lg_)), minus(plus.size());
    for (int l = 0; l < le_; ++l) {
        for (int m = 0; m < lg_; ++m) {
            plus[static_cast<std::size_t>(l * lg_ + m)] = franck_condon(l, m, eta);
            minus[static_cast<std::size_t>(l * lg_ + m)] = franck_condon(l, m, -eta);
        }
    }
    data_.resize(static_cast<std::size_t>(le_) * lg_ * lg_ * le_);
    for (int l = 0; l < le_; ++l)
        for (int m = 0; m < lg_; ++m)
            for (int mp = 0; mp < lg_; ++mp)
                for (int lp = 0; lp < le_; ++lp) {
                    const auto a = static_cast<std::size_t>(l * lg_ + m);
                    const auto b = static_cast<std::size_t>(lp * lg_ + mp);
                    data_[((static_cast<std::size_t>(l) * lg_ + m) * lg_ + mp) * le_ + lp] =
                        0.5 * (plus[a] * std::conj(plus[b]) + minus[a] * std::conj(minus[b]));
                }
}

double CouplingTensor::unitarity_defect() const
{
    double worst = 0.0;
    for (int l = 0; l < le_; ++l) {
        double sum = 0.0;
        for (int m = 0; m < lg_; ++m) sum += std::norm(franck_condon(l, m, eta_));
        worst = std::max(worst, std::abs(1.0 - sum));
    }
    return worst;
}

CouplingTensor build_alpha(const ReducedBREModel& model, double eta)
{
    model.validate();
    return CouplingTensor(model.M_g, model.M_g, eta);
}

std::string to_string(TransferClass c)
{
    switch (c) {
    case TransferClass::None: return "neutral";
    case TransferClass::Bad: return "bad";
    case TransferClass::Good: return "good";
    case TransferClass::Other: return "other";
    }
    return "neutral";
}

double competition_closed_form(double epsilon, std::int64_t n0)
{
    const double x = epsilon * static_cast<double>(n0 + 1);
    return x / (1.0 + x);
}

namespace {

constexpr int kExcited = 0;
constexpr int kAuxiliary = 1;

// Active atom (internal state, level) times background configurations: the
// initial one plus every single transfer m -> m'.
struct Space {
    int levels = 1;
    int internals = 1;
    std::vector<std::vector<std::int64_t>> configs;
    std::vector<TransferClass> cls;
    std::map<std::vector<std::int64_t>, int> lookup;

    int dim() const { return static_cast<int>(configs.size()) * internals * levels; }
    int index(int internal, int l, int b) const { return (b * internals + internal) * levels + l; }
    int config_of(int i) const { return i / (internals * levels); }
    bool excited(int i) const { return (i / levels) % internals == kExcited; }
};

Space build_space(const ReducedBREModel& model, const LambdaSystemSpec& spec)
{
    Space s;
    s.levels = model.M_g;
    s.internals = (spec.Omega > 0.0 || model.initial_internal == InternalState::Auxiliary) ? 2 : 1;
    std::vector<std::int64_t> base(static_cast<std::size_t>(model.M_g), 0);
    std::copy(model.occupations.begin(), model.occupations.end(), base.begin());
    s.configs.push_back(base);
    s.cls.push_back(TransferClass::None);
    s.lookup[base] = 0;
    for (int m = 0; m < model.M_g; ++m) {
        if (base[static_cast<std::size_t>(m)] == 0) continue;
        for (int mp = 0; mp < model.M_g; ++mp) {
            if (mp == m) continue;
            auto c = base;
            --c[static_cast<std::size_t>(m)];
            ++c[static_cast<std::size_t>(mp)];
            s.lookup[c] = static_cast<int>(s.configs.size());
            s.configs.push_back(c);
            s.cls.push_back(m == 0 ? TransferClass::Bad
                                   : (mp == 0 ? TransferClass::Good : TransferClass::Other));
        }
    }
    return s;
}

MatrixXcd build_h0(const Space& s, const LambdaSystemSpec& spec)
{
    const int n = s.dim();
    MatrixXcd h = MatrixXcd::Zero(n, n);
    for (int b = 0; b < static_cast<int>(s.configs.size()); ++b) {
        double bg = 0.0;
        for (std::size_t m = 0; m < s.configs[static_cast<std::size_t>(b)].size(); ++m)
            bg += spec.omega_trap * static_cast<double>(m) * static_cast<double>(s.configs[static_cast<std::size_t>(b)][m]);
        for (int l = 0; l < s.levels; ++l) {
            const double e = bg + spec.omega_trap * l;
            const int ie = s.index(kExcited, l, b);
            h(ie, ie) = cd(e - spec.delta, -spec.gamma_er);
            if (s.internals == 2) {
                const int ir = s.index(kAuxiliary, l, b);
                h(ir, ir) = e;
                h(ie, ir) = 0.5 * spec.Omega;
                h(ir, ie) = 0.5 * spec.Omega;
            }
        }
    }
    return h;
}

// Restriction of sum_k w_k C_k^dagger C_k to the space, C_k the slow-line
// jump operator for emission direction k.
MatrixXcd build_k(const Space& s, const CouplingTensor& alpha)
{
    const int n = s.dim();
    MatrixXcd k = MatrixXcd::Zero(n, n);
    for (int b = 0; b < static_cast<int>(s.configs.size()); ++b) {
        for (int mp = 0; mp < s.levels; ++mp) {
            for (int m = 0; m < s.levels; ++m) {
                auto c = s.configs[static_cast<std::size_t>(b)];
                double amp = std::sqrt(static_cast<double>(c[static_cast<std::size_t>(mp)] + 1));
                ++c[static_cast<std::size_t>(mp)];
                if (c[static_cast<std::size_t>(m)] == 0) continue;
                amp *= std::sqrt(static_cast<double>(c[static_cast<std::size_t>(m)]));
                --c[static_cast<std::size_t>(m)];
                auto it = s.lookup.find(c);
                if (it == s.lookup.end()) continue;
                for (int l = 0; l < s.levels; ++l)
                    for (int lp = 0; lp < s.levels; ++lp)
                        k(s.index(kExcited, l, it->second), s.index(kExcited, lp, b)) +=
                            alpha(l, m, mp, lp) * amp;
            }
        }
    }
    return k;
}

VectorXcd initial_vector(const Space& s, const ReducedBREModel& model)
{
    VectorXcd v = VectorXcd::Zero(s.dim());
    const int internal = model.initial_internal == InternalState::Excited ? kExcited : kAuxiliary;
    v(s.index(internal, model.initial_level, 0)) = 1.0;
    return v;
}

struct Nodes {
    std::vector<double> x;  // on [0, 1]
    std::vector<double> w;
};

const Nodes& gauss_nodes()
{
    static const Nodes nodes = [] {
        using G = boost::math::quadrature::gauss<double, 10>;
        Nodes n;
        const auto& a = G::abscissa();
        const auto& w = G::weights();
        for (std::size_t i = 0; i < a.size(); ++i) {
            n.x.push_back(0.5 * (1.0 - a[i]));
            n.w.push_back(0.5 * w[i]);
            n.x.push_back(0.5 * (1.0 + a[i]));
            n.w.push_back(0.5 * w[i]);
        }
        return n;
    }();
    return nodes;
}

// Integrates f(psi(t), weight) over t >= 0 for psi' = G psi, psi(0) = psi0.
// Returns the horizon reached.
double integrate(const MatrixXcd& g, const VectorXcd& psi0, const IntegrationOptions& opts,
                 double gamma_er, const std::function<void(const VectorXcd&, double)>& f)
{
    const double h = opts.step / gamma_er;
    const double max_t = opts.max_span / gamma_er;
    const auto& nodes = gauss_nodes();
    const MatrixXcd step = (g * h).exp();
    std::vector<MatrixXcd> at_node;
    for (double x : nodes.x) at_node.push_back((g * (h * x)).exp());

    VectorXcd psi = psi0;
    const double norm0 = psi0.squaredNorm();
    double t = 0.0;
    while (t < max_t) {
        for (std::size_t j = 0; j < nodes.x.size(); ++j) f(at_node[j] * psi, nodes.w[j] * h);
        psi = step * psi;
        t += h;
        if (psi.squaredNorm() < opts.tolerance * norm0) return t;
    }
    throw ConvergenceError("propagation did not decay within the maximum span");
}

OrderTerms order_terms_once(const ReducedBREModel& model, const LambdaSystemSpec& spec,
                            const IntegrationOptions& opts)
{
    const Space s = build_space(model, spec);
    const CouplingTensor alpha(model.M_g, model.M_g, spec.eta);
    const int n = s.dim();
    const MatrixXcd a = cd(0.0, -1.0) * build_h0(s, spec);
    const MatrixXcd k = build_k(s, alpha);
    const MatrixXcd b = -spec.gamma_eg * k;  // -i H1 with H1 = -i gamma_eg K

    MatrixXcd g = MatrixXcd::Zero(3 * n, 3 * n);
    for (int blk = 0; blk < 3; ++blk) g.block(blk * n, blk * n, n, n) = a;
    g.block(n, 0, n, n) = b;
    g.block(2 * n, n, n, n) = b;
    VectorXcd psi0 = VectorXcd::Zero(3 * n);
    psi0.head(n) = initial_vector(s, model);

    const double fast = 2.0 * spec.gamma_er;
    const double slow = 2.0 * spec.gamma_eg;
    OrderTerms out;
    out.span = integrate(g, psi0, opts, spec.gamma_er, [&](const VectorXcd& psi, double w) {
        const auto p0 = psi.head(n);
        const auto p1 = psi.segment(n, n);
        const auto p2 = psi.tail(n);
        const VectorXcd kp0 = k * p0;
        out.A1a += w * slow * p0.dot(kp0).real();
        out.A2b += w * slow * 2.0 * kp0.dot(p1).real();
        for (int i = 0; i < n; ++i) {
            if (!s.excited(i)) continue;
            out.A0 += w * fast * std::norm(p0(i));
            out.A1b += w * fast * 2.0 * (std::conj(p0(i)) * p1(i)).real();
            const double second = w * fast * (std::norm(p1(i)) + 2.0 * (std::conj(p0(i)) * p2(i)).real());
            switch (s.cls[static_cast<std::size_t>(s.config_of(i))]) {
            case TransferClass::None: out.A2a_neutral += second; break;
            case TransferClass::Bad: out.A2a_bad += second; break;
            case TransferClass::Good: out.A2a_good += second; break;
            case TransferClass::Other: out.A2a_other += second; break;
            }
        }
    });
    return out;
}

bool shifted(double a, double b, double rel)
{
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale > 0.0 && std::abs(a - b) > rel * scale;
}

}  // namespace

OrderTerms compute_order_terms(const ReducedBREModel& model, const LambdaSystemSpec& spec,
                               const IntegrationOptions& opts)
{
    model.validate();
    spec.validate();
    OrderTerms out = order_terms_once(model, spec, opts);
    if (!opts.verify_convergence) return out;

    ReducedBREModel wider = model;
    wider.M_g += 2;
    IntegrationOptions longer = opts;
    longer.tolerance = opts.tolerance * 1e-4;
    longer.step = opts.step / 2.0;
    for (const auto& [label, check] :
         {std::pair{"levels", order_terms_once(wider, spec, opts)},
          std::pair{"span", order_terms_once(model, spec, longer)}}) {
        const double pairs[][2] = {{out.A0, check.A0},           {out.A1a, check.A1a},
                                   {out.A1b, check.A1b},         {out.A2a_neutral, check.A2a_neutral},
                                   {out.A2a_bad, check.A2a_bad}, {out.A2a_good, check.A2a_good},
                                   {out.A2b, check.A2b}};
        for (const auto& p : pairs)
            if (shifted(p[0], p[1], 0.01))
                throw ConvergenceError(std::string("order terms shift by more than 1% when raising ") + label);
    }
    return out;
}

FullOutcome propagate_full(const ReducedBREModel& model, const LambdaSystemSpec& spec,
                           const IntegrationOptions& opts)
{
    model.validate();
    spec.validate();
    const Space s = build_space(model, spec);
    const CouplingTensor alpha(model.M_g, model.M_g, spec.eta);
    const int n = s.dim();
    const MatrixXcd k = build_k(s, alpha);
    const MatrixXcd g = cd(0.0, -1.0) * build_h0(s, spec) - spec.gamma_eg * k;

    const double fast = 2.0 * spec.gamma_er;
    const double slow = 2.0 * spec.gamma_eg;
    FullOutcome out;
    integrate(g, initial_vector(s, model), opts, spec.gamma_er, [&](const VectorXcd& psi, double w) {
        out.slow += w * slow * psi.dot(k * psi).real();
        for (int i = 0; i < n; ++i) {
            if (!s.excited(i)) continue;
            const double p = w * fast * std::norm(psi(i));
            switch (s.cls[static_cast<std::size_t>(s.config_of(i))]) {
            case TransferClass::None: out.fast_neutral += p; break;
            case TransferClass::Bad: out.fast_bad += p; break;
            case TransferClass::Good: out.fast_good += p; break;
            case TransferClass::Other: out.fast_other += p; break;
            }
        }
    });
    return out;
}

std::vector<KernelPoint> correlation_kernel(const ReducedBREModel& model, const LambdaSystemSpec& spec,
                                            const std::vector<double>& taus,
                                            const IntegrationOptions& opts)
{
    model.validate();
    spec.validate();
    const Space s = build_space(model, spec);
    const CouplingTensor alpha(model.M_g, model.M_g, spec.eta);
    const int n = s.dim();
    const MatrixXcd a = cd(0.0, -1.0) * build_h0(s, spec);
    const MatrixXcd b = -spec.gamma_eg * build_k(s, alpha);

    // Fast-decay weight restricted to transferred backgrounds.
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        if (s.excited(i) && s.cls[static_cast<std::size_t>(s.config_of(i))] != TransferClass::None)
            d(i) = 2.0 * spec.gamma_er;

    // M = int_0^inf U0(u)^dagger D U0(u) du.
    MatrixXcd m = MatrixXcd::Zero(n, n);
    {
        const auto& nodes = gauss_nodes();
        const double h = opts.step / spec.gamma_er;
        const MatrixXcd step = (a * h).exp();
        std::vector<MatrixXcd> at_node;
        for (double x : nodes.x) at_node.push_back((a * (h * x)).exp());
        MatrixXcd u = MatrixXcd::Identity(n, n);
        double t = 0.0;
        while (t < opts.max_span / spec.gamma_er) {
            for (std::size_t j = 0; j < nodes.x.size(); ++j) {
                const MatrixXcd v = at_node[j] * u;
                m += (nodes.w[j] * h) * (v.adjoint() * d.asDiagonal() * v);
            }
            u = step * u;
            t += h;
            if (u.squaredNorm() < opts.tolerance) break;
        }
    }

    const VectorXcd psi0 = initial_vector(s, model);
    std::vector<cd> values;
    std::vector<double> all_taus{0.0};
    all_taus.insert(all_taus.end(), taus.begin(), taus.end());
    for (double tau : all_taus) {
        const MatrixXcd ut = (a * tau).exp();
        const MatrixXcd p = (ut * b).adjoint() * m * (b * ut);
        cd value = 0.0;
        integrate(a, psi0, opts, spec.gamma_er,
                  [&](const VectorXcd& v, double w) { value += w * v.dot(p * v); });
        values.push_back(value);
    }
    std::vector<KernelPoint> out;
    const double ref = std::abs(values.front());
    for (std::size_t i = 0; i < taus.size(); ++i)
        out.push_back({taus[i], ref > 0.0 ? std::abs(values[i + 1]) / ref : 0.0});
    return out;
}

PowerLawFit fit_power_law(const std::vector<double>& eps, const std::vector<double>& n0,
                          const std::vector<double>& y)
{
    if (eps.size() != n0.size() || eps.size() != y.size())
        throw InvalidParameter("fit_power_law: series lengths differ");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] > 0.0 && eps[i] > 0.0 && n0[i] > 0.0) keep.push_back(i);
    const auto rows = static_cast<Eigen::Index>(keep.size());
    const bool vary_n0 = std::any_of(keep.begin(), keep.end(),
                                     [&](std::size_t i) { return n0[i] != n0[keep.front()]; });
    const Eigen::Index cols = vary_n0 ? 3 : 2;
    if (rows < cols) throw InvalidParameter("fit_power_law: not enough positive points");

    Eigen::MatrixXd x(rows, cols);
    Eigen::VectorXd ly(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t i = keep[static_cast<std::size_t>(r)];
        x(r, 0) = 1.0;
        x(r, 1) = std::log(eps[i]);
        if (vary_n0) x(r, 2) = std::log(n0[i]);
        ly(r) = std::log(y[i]);
    }
    const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(ly);
    const Eigen::VectorXd resid = ly - x * beta;

    PowerLawFit fit;
    fit.points = static_cast<int>(rows);
    fit.log_prefactor = beta(0);
    fit.eps_exponent = beta(1);
    fit.n0_exponent = vary_n0 ? beta(2) : std::nan("");
    fit.rms_residual = std::sqrt(resid.squaredNorm() / static_cast<double>(rows));
    const Eigen::Index dof = rows - cols;
    if (dof > 0) {
        const double sigma2 = resid.squaredNorm() / static_cast<double>(dof);
        const Eigen::MatrixXd cov = sigma2 * (x.transpose() * x).inverse();
        const double tq =
            boost::math::quantile(boost::math::students_t(static_cast<double>(dof)), 0.975);
        fit.eps_ci = tq * std::sqrt(cov(1, 1));
        fit.n0_ci = vary_n0 ? tq * std::sqrt(cov(2, 2)) : std::nan("");
    } else {
        fit.eps_ci = fit.n0_ci = std::nan("");
    }
    return fit;
}

ScalingReport scaling_report(const ScalingGrid& grid, const ReducedBREModel& base,
                             const LambdaSystemSpec& spec, const IntegrationOptions& opts)
{
    base.validate();
    spec.validate();
    ScalingReport report;
    std::vector<double> e, n, bad, bad_full, a1a, a1a_full;
    for (double eps : grid.epsilon) {
        for (std::int64_t n0 : grid.n0) {
            ScalingPoint p;
            p.epsilon = eps;
            p.n0 = n0;
            ReducedBREModel model = base;
            model.occupations.resize(static_cast<std::size_t>(model.M_g), 0);
            model.occupations[0] = n0;
            LambdaSystemSpec sp = spec;
            sp.gamma_eg = eps * spec.gamma_er;
            p.terms = compute_order_terms(model, sp, opts);
            p.full = propagate_full(model, sp, opts);

            LambdaSystemSpec single = sp;
            single.eta = 0.0;
            single.Omega = 0.0;
            p.competition_full = propagate_full(ReducedBREModel::condensate(1, n0), single, opts).slow;
            p.competition_closed = competition_closed_form(eps, n0);
            report.competition_max_rel_error =
                std::max(report.competition_max_rel_error,
                         std::abs(p.competition_full - p.competition_closed) / p.competition_closed);

            const double en = eps * static_cast<double>(n0);
            p.outside_validity = en > grid.validity_limit;
            report.max_residual = std::max(report.max_residual, std::abs(p.terms.residual()));
            if (en > 0.0)
                report.max_residual_bound =
                    std::max(report.max_residual_bound, std::abs(p.terms.residual()) / (en * en * en));
            if (p.outside_validity) {
                ++report.flagged;
            } else {
                e.push_back(eps);
                n.push_back(static_cast<double>(n0));
                bad.push_back(p.terms.A2a_bad);
                bad_full.push_back(p.full.fast_bad);
                a1a.push_back(p.terms.A1a);
                a1a_full.push_back(p.full.slow);
            }
            report.points.push_back(p);
        }
    }
    report.bad = fit_power_law(e, n, bad);
    report.bad_full = fit_power_law(e, n, bad_full);
    report.a1a = fit_power_law(e, n, a1a);
    report.a1a_resummed = fit_power_law(e, n, a1a_full);
    return report;
}

}  // namespace condload

// Branching-ratio expansion on a reduced one-dimensional Lambda system.
//
// One active atom sits in |e> (or |r>) above a fixed background of |g>
// bosons. The fast e -> r decay ends a sequence; the slow e -> g line
// either emits a photon that escapes (a jump) or one that another trapped
// atom reabsorbs (the non-Hermitian coupling H1). Probabilities are
// expanded order by order in gamma_eg.
//
// Units: every rate and frequency is in the same unit; gamma_er = 1 is the
// natural choice.
#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace condload {

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LambdaSystemSpec {
    double gamma_er = 1.0;     // fast-line amplitude decay rate
    double gamma_eg = 1e-3;    // slow-line amplitude decay rate
    double Omega = 0.0;        // r <-> e Rabi frequency
    double delta = 0.0;        // laser detuning
    double omega_trap = 2e-4;  // common trap frequency of |e>, |g>, |r>
    double eta = 0.0;          // Lamb-Dicke parameter multiplying (a + a^dagger)

    double epsilon() const { return gamma_eg / gamma_er; }
    void validate() const;

    friend bool operator==(const LambdaSystemSpec&, const LambdaSystemSpec&) = default;
};

enum class InternalState { Excited, Auxiliary };  // |e>, |r>

struct ReducedBREModel {
    int M_g = 1;                           // retained |g> levels; |e>, |r> keep as many
    std::vector<std::int64_t> occupations; // background bosons per |g> level
    int initial_level = 0;
    InternalState initial_internal = InternalState::Excited;

    void validate() const;
    /// `n0` atoms in level 0, the rest empty.
    static ReducedBREModel condensate(int M_g, std::int64_t n0, int initial_level = 0);

    friend bool operator==(const ReducedBREModel&, const ReducedBREModel&) = default;
};

/// <l| exp(i eta (a + a^dagger)) |m>
///   = e^{-eta^2/2} (i eta)^{|l-m|} sqrt(n_<! / n_>!) L_{n_<}^{|l-m|}(eta^2).
std::complex<double> franck_condon(int l, int m, double eta);

/// alpha^R_{l m m' l'} = 1/2 [eta_lm(+k) eta*_l'm'(+k) + eta_lm(-k) eta*_l'm'(-k)]
/// for l, l' < levels_e and m, m' < levels_g.
class CouplingTensor {
public:
    CouplingTensor(int levels_e, int levels_g, double eta);

    int levels_e() const { return le_; }
    int levels_g() const { return lg_; }
    std::complex<double> operator()(int l, int m, int mp, int lp) const
    {
        return data_[((static_cast<std::size_t>(l) * lg_ + m) * lg_ + mp) * le_ + lp];
    }

    /// max over l of |1 - sum_{m < levels_g} |eta_lm|^2|.
    double unitarity_defect() const;

private:
    int le_;
    int lg_;
    double eta_;
    std::vector<std::complex<double>> data_;
};

CouplingTensor build_alpha(const ReducedBREModel& model, double eta);

/// Outcome of a reabsorption that moves one background atom from level m to m'.
enum class TransferClass { None, Bad, Good, Other };  // Bad: m = 0; Good: m' = 0
std::string to_string(TransferClass c);

struct OrderTerms {
    double A0 = 0.0;
    double A1a = 0.0;   // slow-line jump, no reabsorption
    double A1b = 0.0;   // first-order change of the fast-decay probability
    double A2a_neutral = 0.0;
    double A2a_bad = 0.0;
    double A2a_good = 0.0;
    double A2a_other = 0.0;  // both levels above the ground level
    double A2b = 0.0;
    double span = 0.0;       // integration horizon used

    double A2a() const { return A2a_neutral + A2a_bad + A2a_good + A2a_other; }
    double total() const { return A0 + A1a + A1b + A2a() + A2b; }
    double residual() const { return 1.0 - total(); }
};

/// Outcome probabilities of the untruncated-in-epsilon propagation under
/// H0 + H1 on the same space (background plus single transfers).
struct FullOutcome {
    double slow = 0.0;
    double fast_neutral = 0.0;
    double fast_bad = 0.0;
    double fast_good = 0.0;
    double fast_other = 0.0;

    double total() const { return slow + fast_neutral + fast_bad + fast_good + fast_other; }
};

struct IntegrationOptions {
    double step = 0.5;           // in units of 1/gamma_er
    double tolerance = 1e-15;    // stop once the remaining weight falls below this
    double max_span = 1e5;       // in units of 1/gamma_er
    bool verify_convergence = false;  // rerun with more levels and a longer span
};

OrderTerms compute_order_terms(const ReducedBREModel& model, const LambdaSystemSpec& spec,
                               const IntegrationOptions& opts = {});

FullOutcome propagate_full(const ReducedBREModel& model, const LambdaSystemSpec& spec,
                           const IntegrationOptions& opts = {});

/// eps (N0 + 1) / (1 + eps (N0 + 1)): slow-line branching with a single level.
double competition_closed_form(double epsilon, std::int64_t n0);

struct KernelPoint {
    double tau = 0.0;
    double magnitude = 0.0;  // |K(tau)| / |K(0)|
};

/// Population-changing part of the second-order fast-decay integrand as a
/// function of the separation tau between the two reabsorption insertions.
std::vector<KernelPoint> correlation_kernel(const ReducedBREModel& model, const LambdaSystemSpec& spec,
                                            const std::vector<double>& taus,
                                            const IntegrationOptions& opts = {});

struct PowerLawFit {
    double log_prefactor = 0.0;
    double eps_exponent = 0.0;
    double eps_ci = 0.0;   // 95% half-width
    double n0_exponent = 0.0;
    double n0_ci = 0.0;
    double rms_residual = 0.0;
    int points = 0;
};

/// Least squares of log y = c + a log eps + b log n0.
PowerLawFit fit_power_law(const std::vector<double>& eps, const std::vector<double>& n0,
                          const std::vector<double>& y);

struct ScalingGrid {
    std::vector<double> epsilon{1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
    std::vector<std::int64_t> n0{1, 3, 10, 30, 100};
    double validity_limit = 0.5;  // eps N0 beyond this is flagged

    friend bool operator==(const ScalingGrid&, const ScalingGrid&) = default;
};

struct ScalingPoint {
    double epsilon = 0.0;
    std::int64_t n0 = 0;
    OrderTerms terms;
    FullOutcome full;
    double competition_full = 0.0;    // single level, full propagation
    double competition_closed = 0.0;
    bool outside_validity = false;
};

struct ScalingReport {
    std::vector<ScalingPoint> points;
    PowerLawFit bad;          // A2a_bad over valid points
    PowerLawFit bad_full;     // full-propagation bad outcome, same points
    PowerLawFit a1a;          // strict first order
    PowerLawFit a1a_resummed; // full-propagation slow-line probability
    double competition_max_rel_error = 0.0;
    double max_residual = 0.0;
    double max_residual_bound = 0.0;   // max over points of residual / (eps N0)^3
    int flagged = 0;
};

/// `base` fixes M_g, eta, initial level and the non-condensate background;
/// each grid point replaces occupations[0] with N0 and gamma_eg with
/// eps * gamma_er.
ScalingReport scaling_report(const ScalingGrid& grid, const ReducedBREModel& base,
                             const LambdaSystemSpec& spec, const IntegrationOptions& opts = {});

}  // namespace condload

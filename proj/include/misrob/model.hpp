#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "misrob/errors.hpp"

namespace misrob {

// Contamination model parameters. An epsilon fraction of observations passes
// through an arbitrary unknown masking mechanism; the rest is revealed
// completely at random with probability q. All downstream machinery consumes
// the derived likelihood-ratio band [L, U] and the ratio tau.
class ContaminationParams {
public:
    ContaminationParams(double epsilon, double q = 1.0) : epsilon_(epsilon), q_(q) {
        if (!(epsilon >= 0.0 && epsilon < 1.0))
            throw ConfigError("ContaminationParams: epsilon must be in [0,1)");
        if (!(q > 0.0 && q <= 1.0)) throw ConfigError("ContaminationParams: q must be in (0,1]");
    }

    double epsilon() const { return epsilon_; }
    double q() const { return q_; }

    double lower() const { return q_ * (1.0 - epsilon_); }        // L
    double upper() const { return lower() + epsilon_; }           // U = L + eps
    double tau() const { return epsilon_ / (q_ * (1.0 - epsilon_)); }

private:
    double epsilon_;
    double q_;
};

// Bounds on dQ/dP over the real observations: [q(1-eps), q(1-eps)+eps].
inline std::pair<double, double> likelihood_band(const ContaminationParams& p) {
    return {p.lower(), p.upper()};
}

// Bounds on the conditional density ratio dQ_R/dP given observation:
// [1 - eps/U, 1 + eps/L]. For q = 1 this is (1/(1+tau), 1+tau).
inline std::pair<double, double> conditional_band(const ContaminationParams& p) {
    const double L = p.lower();
    if (L <= 0.0) throw NumericError("conditional_band: degenerate model (L = 0)");
    return {1.0 - p.epsilon() / p.upper(), 1.0 + p.epsilon() / L};
}

struct Q1Reduction {
    double epsilon_prime;
    double q_prime;
};

// Fold the MCAR thinning into the contamination fraction:
// eps' = eps/(eps + q(1-eps)), q' = eps + q(1-eps). The invariant
// q'(1-eps') = q(1-eps) holds to machine precision.
inline Q1Reduction reduce_to_q1(const ContaminationParams& p) {
    const double qp = p.epsilon() + p.lower();
    return {p.epsilon() / qp, qp};
}

// Confidence bookkeeping for the estimators: alpha is the resolution scale
// sqrt((d + log(1/delta)) / (n q (1-eps))).
struct ConfidenceParams {
    std::int64_t n = 0;
    int d = 0;
    double delta = 0.1;

    double alpha(const ContaminationParams& p) const {
        if (n < 1 || !(delta > 0.0 && delta < 1.0) || d < 0)
            throw ConfigError("ConfidenceParams: need n >= 1, d >= 0, delta in (0,1)");
        return std::sqrt((d + std::log(1.0 / delta)) /
                         (static_cast<double>(n) * p.q() * (1.0 - p.epsilon())));
    }

    ConfidenceParams with_delta(double dl) const { return {n, d, dl}; }
};

struct MembershipReport {
    bool ok = false;
    double worst_violation = 0.0;
    double argmax = 0.0;  // grid point attaining the worst violation
};

// Checks that a conditional density ratio dQ_R/dP stays within [L/b, U/b] on
// the supplied grid and that the observed mass b itself lies in [L, U].
// Violations are reported, not thrown.
inline MembershipReport verify_membership(const std::function<double(double)>& ratio_fn,
                                          double mass_observed, const ContaminationParams& p,
                                          const std::vector<double>& grid, double tol = 1e-9) {
    if (grid.empty()) throw ConfigError("verify_membership: empty grid");
    const double L = p.lower();
    const double U = p.upper();
    const double b = mass_observed;

    MembershipReport rep;
    rep.worst_violation = std::max(std::max(L - b, b - U), 0.0);
    rep.argmax = grid.front();
    const double lo = L / b;
    const double hi = U / b;
    for (const double z : grid) {
        const double r = ratio_fn(z);
        const double viol = std::max(std::max(lo - r, r - hi), 0.0);
        if (viol > rep.worst_violation) {
            rep.worst_violation = viol;
            rep.argmax = z;
        }
    }
    rep.ok = rep.worst_violation <= tol;
    return rep;
}

}  // namespace misrob

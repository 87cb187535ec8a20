#ifndef STEERSIM_STEERING_HPP
#define STEERSIM_STEERING_HPP

#include "steersim/schemes.hpp"

#include <span>

namespace steersim::steering {

using channel::Drop;
using schemes::DropAnalysis;
using schemes::Fallback;
using schemes::SchemeResult;

/// Coefficients of the DIS SINR rational function
///   phi(rho) = (a - rho^2 b) / (c - rho d + rho^2 e)
/// with a = p0e lambda^2, b = p1e |g|^2 lambda^2, c = p1e |chi|^2 + sigma^2,
/// d = 2 p1e |chi|^2, e = p1e |chi|^2.
struct RhoCoefficients {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    double e = 0.0;

    static RhoCoefficients from_link(double p0e_budget, double p1e_n, double sigma2,
                                     double lambda, double g_norm2, double chi_abs2);
};

struct RhoSolution {
    double rho_star = 0.0;
    double rho_max = 1.0;
    double sinr_at_star = 0.0;
    bool clamped = false;    ///< unconstrained root exceeded rho_max
    bool degenerate = false; ///< chi ~ 0 or g ~ 0: nothing to steer
};

/// SINR of the steered link at a given factor. Requires 0 <= rho <= 1.
double sinr_dis(const RhoCoefficients& k, double rho);

/// Largest affordable steering factor min(1, sqrt(p0e / (p1e |g|^2))).
double rho_max(const Drop& drop);
double rho_max(const RhoCoefficients& k);

/// Smaller root of (bd/2) rho^2 - (bc + ae) rho + (ad/2) = 0, the SINR
/// maximizer. Asserts the discriminant is positive; computed in the
/// cancellation-free form a d / (S + sqrt(S^2 - a b d^2)), S = bc + ae.
RhoSolution solve_rho(const RhoCoefficients& k);

/// Larger (always infeasible) root, kept for invariant checks.
double rho_plus(const RhoCoefficients& k);

RhoCoefficients coefficients_for(const Drop& drop);
RhoCoefficients coefficients_for(const DropAnalysis& an);

RhoSolution optimal_rho(const Drop& drop);
RhoSolution optimal_rho(const DropAnalysis& an);

/// DIS on a single-interference, single-stream drop: closed-form rho*, then
/// the steered transmission at that factor. Never needs a fallback since
/// rho* <= rho_max keeps the overhead within budget.
SchemeResult dis(const Drop& drop);
SchemeResult dis(const Drop& drop, const DropAnalysis& an);

/// N interferences with a per-interference power budget; each factor is
/// optimized independently under its own budget, so the result can trail
/// the joint optimum. Budgets must be nonnegative and sum to at most p0e.
SchemeResult dis_multi_interference(const Drop& drop, std::span<const double> budgets);
SchemeResult dis_multi_interference(const Drop& drop, const DropAnalysis& an,
                                    std::span<const double> budgets);

struct JointRho {
    double rho1 = 0.0;
    double rho2 = 0.0;
    double se = 0.0;
};

/// Joint optimization of (rho1, rho2) for N = 2: interior stationary points
/// by damped Newton on the analytic gradient (multiple starts), classified
/// by the second-derivative test, plus a full boundary scan; the global
/// maximizer wins. The equal-budget independent solution is always a
/// candidate, so the result never underperforms it.
JointRho joint_rho_n2(const Drop& drop);
JointRho joint_rho_n2(const Drop& drop, const DropAnalysis& an);

/// M desired streams (single interference): per-stream rho* under the given
/// per-stream power budgets, which must sum to p0e.
SchemeResult dis_multi_stream(const Drop& drop, std::span<const double> stream_powers);
SchemeResult dis_multi_stream(const Drop& drop, const DropAnalysis& an,
                              std::span<const double> stream_powers);

} // namespace steersim::steering

#endif

#include "steersim/steering.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

namespace steersim::steering {

namespace {

constexpr double kDegenerateRel = 1e-15;

/// chi^2 measured against the interference vector it projects from.
bool chi_degenerate(double chi_abs2, double i_raw_norm2)
{
    return chi_abs2 <= kDegenerateRel * i_raw_norm2;
}

/// rho* candidates compared on the rational SINR itself; used for the
/// virtual per-budget problems. Ties keep the closed-form root.
double choose_rho_virtual(const RhoCoefficients& k, bool degenerate)
{
    if (degenerate || k.b <= 0.0 || k.e <= 0.0 || k.a <= 0.0) {
        return 0.0;
    }
    const RhoSolution sol = solve_rho(k);
    double best_rho = sol.rho_star;
    double best = sinr_dis(k, best_rho);
    const double phi0 = sinr_dis(k, 0.0);
    if (phi0 > best) {
        best = phi0;
        best_rho = 0.0;
    }
    if (k.b <= k.a) { // full orthogonal steering affordable
        const double phi1 = sinr_dis(k, 1.0);
        if (phi1 > best) {
            best_rho = 1.0;
        }
    }
    return best_rho;
}

} // namespace

RhoCoefficients RhoCoefficients::from_link(double p0e_budget, double p1e_n, double sigma2,
                                           double lambda, double g_norm2, double chi_abs2)
{
    RhoCoefficients k;
    const double lam2 = lambda * lambda;
    k.a = p0e_budget * lam2;
    k.b = p1e_n * g_norm2 * lam2;
    k.e = p1e_n * chi_abs2;
    k.d = 2.0 * k.e;
    k.c = k.e + sigma2;
    return k;
}

double sinr_dis(const RhoCoefficients& k, double rho)
{
    if (!(rho >= 0.0 && rho <= 1.0)) {
        throw std::domain_error("sinr_dis: rho must lie in [0, 1]");
    }
    const double den = k.c - rho * k.d + rho * rho * k.e;
    if (!(den > 0.0)) {
        throw std::domain_error("sinr_dis: nonpositive denominator");
    }
    return (k.a - rho * rho * k.b) / den;
}

double rho_max(const RhoCoefficients& k)
{
    if (k.b <= 0.0) {
        return 1.0;
    }
    return std::min(1.0, std::sqrt(k.a / k.b));
}

double rho_max(const Drop& drop)
{
    return rho_max(coefficients_for(drop));
}

RhoSolution solve_rho(const RhoCoefficients& k)
{
    if (k.b <= 0.0 || k.e <= 0.0) {
        RhoSolution sol;
        sol.degenerate = true;
        sol.rho_star = 0.0;
        sol.rho_max = 1.0;
        sol.sinr_at_star = k.c > 0.0 ? k.a / k.c : 0.0;
        return sol;
    }

    const double s = k.b * k.c + k.a * k.e;
    const double disc = s * s - k.a * k.b * k.d * k.d;
    if (!(disc > 0.0)) {
        throw numerical_error("solve_rho: discriminant must be positive");
    }

    RhoSolution sol;
    sol.rho_max = rho_max(k);
    sol.rho_star = k.a * k.d / (s + std::sqrt(disc));
    if (sol.rho_star > sol.rho_max) {
        sol.rho_star = sol.rho_max;
        sol.clamped = true;
    }
    sol.sinr_at_star = sinr_dis(k, sol.rho_star);
    return sol;
}

double rho_plus(const RhoCoefficients& k)
{
    const double s = k.b * k.c + k.a * k.e;
    const double disc = s * s - k.a * k.b * k.d * k.d;
    if (!(disc > 0.0)) {
        throw numerical_error("rho_plus: discriminant must be positive");
    }
    return (s + std::sqrt(disc)) / (k.b * k.d);
}

RhoCoefficients coefficients_for(const DropAnalysis& an)
{
    if (an.i_raw.size() != 1 || an.modes.size() != 1) {
        throw std::domain_error("coefficients_for: single interference and stream required");
    }
    const auto& m = an.mode0();
    return RhoCoefficients::from_link(an.p0e, an.p1n[0], an.sigma2, m.lambda, m.g_norm2[0],
                                      std::norm(m.chi[0]));
}

RhoCoefficients coefficients_for(const Drop& drop)
{
    return coefficients_for(schemes::analyze(drop, 1));
}

RhoSolution optimal_rho(const DropAnalysis& an)
{
    if (an.i_raw.size() != 1 || an.modes.size() != 1) {
        throw std::domain_error("optimal_rho: single interference and stream required");
    }
    const auto& m = an.mode0();
    const double chi2 = std::norm(m.chi[0]);
    if (an.p1n[0] <= 0.0 || chi_degenerate(chi2, an.i_raw[0].squaredNorm())) {
        RhoSolution sol;
        sol.degenerate = true;
        sol.rho_star = 0.0;
        sol.rho_max = 1.0;
        const RhoCoefficients k = coefficients_for(an);
        sol.sinr_at_star = k.c > 0.0 ? k.a / k.c : 0.0;
        return sol;
    }
    return solve_rho(coefficients_for(an));
}

RhoSolution optimal_rho(const Drop& drop)
{
    return optimal_rho(schemes::analyze(drop, 1));
}

SchemeResult dis(const Drop& drop)
{
    return dis(drop, schemes::analyze(drop, 1));
}

SchemeResult dis(const Drop& drop, const DropAnalysis& an)
{
    using schemes::Scheme;
    const RhoSolution sol = optimal_rho(an);
    if (sol.degenerate) {
        return schemes::steered_result(drop, an, {0.0}, Scheme::DIS, Fallback::MF);
    }

    // rho* maximizes the SINR; evaluating rho = 1 (when affordable) and
    // rho = 0 through the same result path keeps the per-drop guarantees
    // SE(DIS) >= SE(OIS) and SE(DIS) >= SE(MF) exact in floating point.
    SchemeResult best = schemes::steered_result(drop, an, {sol.rho_star}, Scheme::DIS,
                                                Fallback::MF);
    const RhoCoefficients k = coefficients_for(an);
    if (k.b <= k.a) {
        SchemeResult full = schemes::steered_result(drop, an, {1.0}, Scheme::DIS, Fallback::MF);
        if (full.se_bits > best.se_bits) {
            best = full;
        }
    }
    SchemeResult off = schemes::steered_result(drop, an, {0.0}, Scheme::DIS, Fallback::MF);
    if (off.se_bits > best.se_bits) {
        best = off;
    }
    return best;
}

SchemeResult dis_multi_interference(const Drop& drop, std::span<const double> budgets)
{
    return dis_multi_interference(drop, schemes::analyze(drop, 1), budgets);
}

SchemeResult dis_multi_interference(const Drop& drop, const DropAnalysis& an,
                                    std::span<const double> budgets)
{
    using schemes::Scheme;
    const std::size_t n_int = an.i_raw.size();
    if (budgets.size() != n_int) {
        throw std::domain_error("dis_multi_interference: one budget per interference required");
    }
    double total = 0.0;
    for (double b : budgets) {
        if (b < 0.0) {
            throw std::domain_error("dis_multi_interference: budgets must be nonnegative");
        }
        total += b;
    }
    if (total > an.p0e * (1.0 + 1e-12)) {
        throw std::domain_error("dis_multi_interference: budgets must sum to at most p0e");
    }

    const auto& m = an.mode0();
    std::vector<double> rhos(n_int, 0.0);
    for (std::size_t n = 0; n < n_int; ++n) {
        const double chi2 = std::norm(m.chi[n]);
        const bool degenerate = an.p1n[n] <= 0.0 ||
                                chi_degenerate(chi2, an.i_raw[n].squaredNorm());
        const RhoCoefficients k = RhoCoefficients::from_link(budgets[n], an.p1n[n], an.sigma2,
                                                             m.lambda, m.g_norm2[n], chi2);
        rhos[n] = choose_rho_virtual(k, degenerate);
    }
    return schemes::steered_result(drop, an, rhos, Scheme::DIS, Fallback::MF);
}

namespace {

/// Closed-form joint objective pieces for N = 2.
struct JointProblem {
    double lam2 = 0.0;
    double p0e = 0.0;
    double sigma2 = 1.0;
    std::array<double, 2> beta{};  // p1n |g_n|^2
    std::array<double, 2> eps{};   // p1n |chi_n|^2
    std::array<double, 2> cap{};   // per-coordinate feasibility cap

    double num(const std::array<double, 2>& r) const
    {
        return lam2 * (p0e - beta[0] * r[0] * r[0] - beta[1] * r[1] * r[1]);
    }
    double den(const std::array<double, 2>& r) const
    {
        const double k0 = 1.0 - r[0];
        const double k1 = 1.0 - r[1];
        return sigma2 + eps[0] * k0 * k0 + eps[1] * k1 * k1;
    }
    double phi(const std::array<double, 2>& r) const { return num(r) / den(r); }

    void grad(const std::array<double, 2>& r, std::array<double, 2>& g) const
    {
        const double n = num(r);
        const double mden = den(r);
        for (int i = 0; i < 2; ++i) {
            const double ni = -2.0 * lam2 * beta[i] * r[i];
            const double mi = -2.0 * eps[i] * (1.0 - r[i]);
            g[i] = ni / mden - n * mi / (mden * mden);
        }
    }

    void hess(const std::array<double, 2>& r, std::array<std::array<double, 2>, 2>& h) const
    {
        const double n = num(r);
        const double mden = den(r);
        const double m2 = mden * mden;
        const double m3 = m2 * mden;
        std::array<double, 2> nd{}, md{};
        for (int i = 0; i < 2; ++i) {
            nd[i] = -2.0 * lam2 * beta[i] * r[i];
            md[i] = -2.0 * eps[i] * (1.0 - r[i]);
        }
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                const double nij = i == j ? -2.0 * lam2 * beta[i] : 0.0;
                const double mij = i == j ? 2.0 * eps[i] : 0.0;
                h[i][j] = nij / mden - (nd[i] * md[j] + nd[j] * md[i]) / m2 - n * mij / m2 +
                          2.0 * n * md[i] * md[j] / m3;
            }
        }
    }
};

std::optional<std::array<double, 2>> newton_stationary(const JointProblem& jp,
                                                       std::array<double, 2> r)
{
    std::array<double, 2> g{};
    for (int iter = 0; iter < 80; ++iter) {
        jp.grad(r, g);
        std::array<std::array<double, 2>, 2> h{};
        jp.hess(r, h);
        const double det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if (det == 0.0 || !std::isfinite(det)) {
            return std::nullopt;
        }
        std::array<double, 2> step{(-g[0] * h[1][1] + g[1] * h[0][1]) / det,
                                   (-g[1] * h[0][0] + g[0] * h[1][0]) / det};
        const double gn = std::max(std::abs(g[0]), std::abs(g[1]));

        double scale = 1.0;
        bool accepted = false;
        for (int backtrack = 0; backtrack < 30; ++backtrack) {
            std::array<double, 2> cand{
                std::clamp(r[0] + scale * step[0], 0.0, jp.cap[0]),
                std::clamp(r[1] + scale * step[1], 0.0, jp.cap[1])};
            std::array<double, 2> gc{};
            jp.grad(cand, gc);
            const double gcn = std::max(std::abs(gc[0]), std::abs(gc[1]));
            if (gcn < gn || gcn == 0.0) {
                const bool tiny = std::abs(cand[0] - r[0]) <= 1e-13 * (1.0 + std::abs(r[0])) &&
                                  std::abs(cand[1] - r[1]) <= 1e-13 * (1.0 + std::abs(r[1]));
                r = cand;
                accepted = true;
                if (tiny || gcn == 0.0) {
                    return r;
                }
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) {
            return r; // gradient no longer reducible; treat as converged
        }
    }
    return r;
}

} // namespace

JointRho joint_rho_n2(const Drop& drop)
{
    return joint_rho_n2(drop, schemes::analyze(drop, 1));
}

JointRho joint_rho_n2(const Drop& drop, const DropAnalysis& an)
{
    using schemes::Scheme;
    if (an.i_raw.size() != 2 || an.modes.size() != 1) {
        throw std::domain_error("joint_rho_n2: exactly two interferences and one stream");
    }
    const auto& m = an.mode0();

    JointProblem jp;
    jp.lam2 = m.lambda * m.lambda;
    jp.p0e = an.p0e;
    jp.sigma2 = an.sigma2;
    for (int n = 0; n < 2; ++n) {
        jp.beta[static_cast<std::size_t>(n)] = an.p1n[static_cast<std::size_t>(n)] *
                                               m.g_norm2[static_cast<std::size_t>(n)];
        jp.eps[static_cast<std::size_t>(n)] = an.p1n[static_cast<std::size_t>(n)] *
                                              std::norm(m.chi[static_cast<std::size_t>(n)]);
        jp.cap[static_cast<std::size_t>(n)] =
            jp.beta[static_cast<std::size_t>(n)] > 0.0
                ? std::min(1.0, std::sqrt(an.p0e / jp.beta[static_cast<std::size_t>(n)]))
                : 1.0;
    }

    std::vector<std::array<double, 2>> candidates;

    // equal-budget independent solution: guarantees the dominance property
    {
        const std::vector<double> budgets(2, an.p0e / 2.0);
        const bool deg0 = chi_degenerate(std::norm(m.chi[0]), an.i_raw[0].squaredNorm());
        const bool deg1 = chi_degenerate(std::norm(m.chi[1]), an.i_raw[1].squaredNorm());
        std::array<double, 2> indep{};
        for (int n = 0; n < 2; ++n) {
            const std::size_t un = static_cast<std::size_t>(n);
            const RhoCoefficients k = RhoCoefficients::from_link(
                budgets[un], an.p1n[un], an.sigma2, m.lambda, m.g_norm2[un],
                std::norm(m.chi[un]));
            indep[un] = choose_rho_virtual(k, (n == 0 ? deg0 : deg1) || an.p1n[un] <= 0.0);
        }
        candidates.push_back(indep);
    }

    // interior stationary points (Algorithm-1 steps 1-4)
    if (jp.eps[0] > 0.0 && jp.eps[1] > 0.0) {
        const std::array<double, 3> fractions{0.15, 0.5, 0.85};
        std::vector<std::array<double, 2>> starts;
        for (double f1 : fractions) {
            for (double f2 : fractions) {
                starts.push_back({f1 * jp.cap[0], f2 * jp.cap[1]});
            }
        }
        starts.push_back(candidates.front());
        for (const auto& s : starts) {
            const auto pt = newton_stationary(jp, s);
            if (!pt) {
                continue;
            }
            const auto& r = *pt;
            const bool interior = r[0] > 1e-8 && r[0] < jp.cap[0] - 1e-8 && r[1] > 1e-8 &&
                                  r[1] < jp.cap[1] - 1e-8 && jp.num(r) > 0.0;
            if (!interior) {
                continue;
            }
            std::array<double, 2> g{};
            jp.grad(r, g);
            const double gscale = jp.lam2 * (jp.p0e + jp.beta[0] + jp.beta[1]) / jp.sigma2;
            if (std::max(std::abs(g[0]), std::abs(g[1])) > 1e-7 * std::max(gscale, 1.0)) {
                continue;
            }
            std::array<std::array<double, 2>, 2> h{};
            jp.hess(r, h);
            const double aa = h[0][1];
            const double bb = h[0][0];
            const double cc = h[1][1];
            if (aa * aa - bb * cc < 0.0 && bb < 0.0) {
                candidates.push_back(r);
            }
        }
    }

    // boundary scan (Algorithm-1 step 5): fix one factor at {0, cap} and
    // optimize the other in closed form; corners included
    for (int fixed = 0; fixed < 2; ++fixed) {
        const std::size_t uf = static_cast<std::size_t>(fixed);
        const std::size_t uo = 1u - uf;
        for (double t : {0.0, jp.cap[uf]}) {
            const double rem = std::max(jp.p0e - jp.beta[uf] * t * t, 0.0);
            const double keep = 1.0 - t;
            RhoCoefficients k;
            k.a = rem * jp.lam2;
            k.b = jp.beta[uo] * jp.lam2;
            k.e = jp.eps[uo];
            k.d = 2.0 * k.e;
            k.c = jp.sigma2 + jp.eps[uf] * keep * keep + k.e;
            const double other = choose_rho_virtual(k, jp.eps[uo] <= 0.0);
            std::array<double, 2> r{};
            r[uf] = t;
            r[uo] = other;
            candidates.push_back(r);
            r[uo] = 0.0;
            candidates.push_back(r);
            if (jp.beta[uo] > 0.0) {
                r[uo] = std::min(1.0, std::sqrt(rem / jp.beta[uo]));
                candidates.push_back(r);
            }
        }
    }

    JointRho best;
    best.se = -1.0;
    for (const auto& r : candidates) {
        const double overhead = jp.beta[0] * r[0] * r[0] + jp.beta[1] * r[1] * r[1];
        if (overhead > an.p0e) {
            continue;
        }
        const SchemeResult sr =
            schemes::steered_result(drop, an, {r[0], r[1]}, Scheme::DIS, Fallback::MF);
        if (sr.se_bits > best.se) {
            best.se = sr.se_bits;
            best.rho1 = r[0];
            best.rho2 = r[1];
        }
    }
    return best;
}

SchemeResult dis_multi_stream(const Drop& drop, std::span<const double> stream_powers)
{
    return dis_multi_stream(
        drop, schemes::analyze(drop, static_cast<int>(stream_powers.size())), stream_powers);
}

SchemeResult dis_multi_stream(const Drop& drop, const DropAnalysis& an,
                              std::span<const double> stream_powers)
{
    using schemes::Scheme;
    const std::size_t m_streams = an.modes.size();
    if (an.i_raw.size() != 1) {
        throw std::domain_error("dis_multi_stream: single interference required");
    }
    if (stream_powers.size() != m_streams) {
        throw std::domain_error("dis_multi_stream: one power per stream required");
    }
    double total = 0.0;
    for (double p : stream_powers) {
        if (p < 0.0) {
            throw std::domain_error("dis_multi_stream: stream powers must be nonnegative");
        }
        total += p;
    }
    if (std::abs(total - an.p0e) > 1e-9 * std::max(an.p0e, 1.0)) {
        throw std::domain_error("dis_multi_stream: stream powers must sum to p0e");
    }

    if (m_streams == 1) {
        return dis(drop, an);
    }

    SchemeResult r;
    r.scheme = Scheme::DIS;
    r.rhos.resize(m_streams, 0.0);
    const double i_norm2 = an.i_raw[0].squaredNorm();
    for (std::size_t m = 0; m < m_streams; ++m) {
        const auto& mode = an.modes[m];
        const double chi2 = std::norm(mode.chi[0]);
        const bool degenerate = an.p1n[0] <= 0.0 || chi_degenerate(chi2, i_norm2);
        const RhoCoefficients k = RhoCoefficients::from_link(
            stream_powers[m], an.p1n[0], an.sigma2, mode.lambda, mode.g_norm2[0], chi2);
        const double rho = choose_rho_virtual(k, degenerate);
        r.rhos[m] = rho;

        const double overhead = rho * rho * an.p1n[0] * mode.g_norm2[0];
        const double keep = 1.0 - rho;
        const double residual = keep * keep * an.p1n[0] * chi2;
        const double desired = (stream_powers[m] - overhead) * mode.lambda * mode.lambda;
        r.power_overhead_e += overhead;
        r.residual_interference += residual;
        r.desired_power += desired;
        r.se_bits += schemes::shannon_se(desired, residual, an.sigma2);
    }
    r.rho = std::accumulate(r.rhos.begin(), r.rhos.end(), 0.0) / static_cast<double>(m_streams);
    return r;
}

} // namespace steersim::steering

#include "steersim/schemes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace steersim::schemes {

namespace {

constexpr double kParallelTol = 1e-12;

/// Orthonormal basis of the column span of b, truncated at 1e-12 relative.
CMat span_basis(const CMat& b)
{
    if (b.cols() == 0) {
        return CMat(b.rows(), 0);
    }
    const auto s = numkit::svd(b);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.sigma.size(); ++i) {
        if (s.sigma(i) > 1e-12 * s.sigma(0)) {
            ++rank;
        }
    }
    return s.u.leftCols(rank);
}

/// Unit directions of the active interference components at the PUE.
CMat interference_directions(const DropAnalysis& an)
{
    std::vector<CVec> dirs;
    for (std::size_t n = 0; n < an.i_raw.size(); ++n) {
        const double nn = an.i_raw[n].norm();
        if (an.p1n[n] > 0.0 && nn > 0.0) {
            dirs.push_back(an.i_raw[n] / nn);
        }
    }
    CMat b(an.i_raw.empty() ? 0 : an.i_raw.front().size(), static_cast<Eigen::Index>(dirs.size()));
    for (std::size_t k = 0; k < dirs.size(); ++k) {
        b.col(static_cast<Eigen::Index>(k)) = dirs[k];
    }
    return b;
}

struct FilteredLink {
    double desired = 0.0;
    double residual = 0.0;
    double se = 0.0;
};

FilteredLink mf_link(const DropAnalysis& an)
{
    const ModeGeometry& m = an.mode0();
    FilteredLink out;
    out.desired = an.p0e * m.lambda * m.lambda;
    for (std::size_t n = 0; n < an.i_raw.size(); ++n) {
        out.residual += an.p1n[n] * std::norm(m.chi[n]);
    }
    out.se = shannon_se(out.desired, out.residual, an.sigma2);
    return out;
}

FilteredLink zf_link(const Drop& drop, const DropAnalysis& an)
{
    (void)drop;
    const CVec e_des = an.svd0.u.col(0) * an.svd0.sigma(0); // h0 * p0
    const CMat basis = span_basis(interference_directions(an));

    CVec v = e_des - basis * (basis.adjoint() * e_des);
    FilteredLink out;
    if (v.norm() <= kParallelTol * e_des.norm()) {
        // desired direction lies in the interference span: fully attenuated
        return out;
    }
    const CVec f = v.normalized();
    out.desired = an.p0e * std::norm(numkit::inner(f, e_des));
    for (std::size_t n = 0; n < an.i_raw.size(); ++n) {
        out.residual += an.p1n[n] * std::norm(numkit::inner(f, an.i_raw[n]));
    }
    out.se = shannon_se(out.desired, out.residual, an.sigma2);
    return out;
}

FilteredLink fallback_link(const Drop& drop, const DropAnalysis& an, Fallback fb)
{
    return fb == Fallback::MF ? mf_link(an) : zf_link(drop, an);
}

} // namespace

std::string name(Scheme s)
{
    switch (s) {
    case Scheme::MF: return "mf";
    case Scheme::ZF: return "zf";
    case Scheme::ZFBF: return "zfbf";
    case Scheme::IN: return "in";
    case Scheme::OIS: return "ois";
    case Scheme::IS_FIXED: return "is_fixed";
    case Scheme::DIS: return "dis";
    }
    return "?";
}

std::optional<Scheme> parse_scheme(const std::string& text)
{
    std::string t;
    for (char c : text) {
        t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (t == "mf") return Scheme::MF;
    if (t == "zf") return Scheme::ZF;
    if (t == "zfbf") return Scheme::ZFBF;
    if (t == "in") return Scheme::IN;
    if (t == "ois") return Scheme::OIS;
    if (t == "is_fixed" || t == "is-fixed" || t == "is") return Scheme::IS_FIXED;
    if (t == "dis") return Scheme::DIS;
    return std::nullopt;
}

std::string name(Fallback f)
{
    return f == Fallback::MF ? "mf" : "zf";
}

std::optional<Fallback> parse_fallback(const std::string& text)
{
    std::string t;
    for (char c : text) {
        t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (t == "mf") return Fallback::MF;
    if (t == "zf") return Fallback::ZF;
    return std::nullopt;
}

double shannon_se(double desired_power, double residual, double sigma2)
{
    return std::log2(1.0 + std::max(desired_power, 0.0) / (sigma2 + residual));
}

SchemeResult fallback_result(const Drop& drop, const DropAnalysis& an, Fallback fb)
{
    return fb == Fallback::MF ? mf(drop, an) : zf_rx(drop, an);
}

DropAnalysis analyze(const Drop& drop, int m_streams)
{
    DropAnalysis an;
    an.p0e = drop.budget.p0e;
    an.p1e = drop.budget.p1e;
    an.sigma2 = drop.budget.sigma2;
    an.svd0 = numkit::svd(drop.h0);
    if (an.svd0.sigma(0) <= 0.0) {
        throw std::domain_error("analyze: h0 has no usable eigenmode (zero matrix)");
    }
    if (m_streams < 1 || m_streams > an.svd0.sigma.size()) {
        throw std::domain_error("analyze: m_streams must be in [1, min(n_t0, n_r0)]");
    }
    an.h0_pinv = numkit::pinv(drop.h0);

    an.i_raw.reserve(drop.mbs_precoders.size());
    for (const CVec& p1 : drop.mbs_precoders) {
        an.i_raw.push_back(drop.h10 * p1);
    }
    an.p1n = drop.mbs_stream_powers;

    an.modes.resize(m_streams);
    for (int m = 0; m < m_streams; ++m) {
        ModeGeometry& mode = an.modes[static_cast<std::size_t>(m)];
        mode.lambda = an.svd0.sigma(m);
        if (mode.lambda <= 0.0) {
            throw std::domain_error("analyze: requested stream has zero gain");
        }
        mode.f = an.svd0.u.col(m);
        mode.d_s = (drop.h0 * an.svd0.v.col(m)).normalized();
        mode.proj = numkit::projector(mode.d_s);
        mode.chi.reserve(an.i_raw.size());
        mode.g.reserve(an.i_raw.size());
        mode.g_norm2.reserve(an.i_raw.size());
        for (const CVec& ir : an.i_raw) {
            const CVec projected = mode.proj * ir;
            mode.chi.push_back(numkit::inner(mode.f, projected));
            mode.g.push_back(an.h0_pinv * projected);
            mode.g_norm2.push_back(mode.g.back().squaredNorm());
        }
    }
    return an;
}

SteeringGeometry geometry(const Drop& drop)
{
    if (drop.n_interferences() != 1) {
        throw std::domain_error("geometry: drop must carry a single MBS stream");
    }
    if (drop.h0.norm() == 0.0) {
        throw std::domain_error("geometry: degenerate h0");
    }
    const DropAnalysis an = analyze(drop, 1);
    SteeringGeometry g;
    g.d_s = an.mode0().d_s;
    g.i_vec = std::sqrt(an.p1n[0]) * an.i_raw[0];
    g.i_in = an.mode0().proj * g.i_vec;
    g.i_quad = g.i_vec - g.i_in;
    g.g = an.mode0().g[0];
    g.chi = an.mode0().chi[0];
    return g;
}

SchemeResult steered_result(const Drop& drop, const DropAnalysis& an,
                            const std::vector<double>& rho_per_interference, Scheme tag,
                            Fallback fb)
{
    const std::size_t n_int = an.i_raw.size();
    if (rho_per_interference.size() != n_int) {
        throw std::domain_error("steered_result: one rho per interference required");
    }
    const ModeGeometry& m = an.mode0();

    SchemeResult r;
    r.scheme = tag;
    double overhead = 0.0;
    double residual = 0.0;
    for (std::size_t n = 0; n < n_int; ++n) {
        const double rho = rho_per_interference[n];
        overhead += rho * rho * an.p1n[n] * m.g_norm2[n];
        const double keep = 1.0 - rho;
        residual += keep * keep * an.p1n[n] * std::norm(m.chi[n]);
    }
    r.power_overhead_e = overhead;
    if (tag == Scheme::IS_FIXED || tag == Scheme::DIS) {
        r.rho = n_int == 1 ? rho_per_interference[0]
                           : std::accumulate(rho_per_interference.begin(),
                                             rho_per_interference.end(), 0.0) /
                                 static_cast<double>(n_int);
        if (n_int > 1) {
            r.rhos = rho_per_interference;
        }
    }

    if (overhead > an.p0e) {
        r.feasible = false;
        r.fallback_applied = fb;
        const FilteredLink fl = fallback_link(drop, an, fb);
        r.desired_power = fl.desired;
        r.residual_interference = fl.residual;
        r.se_bits = fl.se;
        return r;
    }

    r.residual_interference = residual;
    r.desired_power = (an.p0e - overhead) * m.lambda * m.lambda;
    r.se_bits = shannon_se(r.desired_power, r.residual_interference, an.sigma2);
    return r;
}

SchemeResult mf(const Drop& drop)
{
    return mf(drop, analyze(drop));
}

SchemeResult mf(const Drop& drop, const DropAnalysis& an)
{
    (void)drop;
    const FilteredLink fl = mf_link(an);
    SchemeResult r;
    r.scheme = Scheme::MF;
    r.desired_power = fl.desired;
    r.residual_interference = fl.residual;
    r.se_bits = fl.se;
    return r;
}

SchemeResult zf_rx(const Drop& drop)
{
    return zf_rx(drop, analyze(drop));
}

SchemeResult zf_rx(const Drop& drop, const DropAnalysis& an)
{
    const FilteredLink fl = zf_link(drop, an);
    SchemeResult r;
    r.scheme = Scheme::ZF;
    r.desired_power = fl.desired;
    r.residual_interference = fl.residual;
    r.se_bits = fl.se;
    return r;
}

SchemeResult zfbf(const Drop& drop, Fallback fb)
{
    return zfbf(drop, analyze(drop), fb);
}

SchemeResult zfbf(const Drop& drop, const DropAnalysis& an, Fallback fb)
{
    SchemeResult r;
    r.scheme = Scheme::ZFBF;

    const CMat dirs = interference_directions(an);
    CMat constrained = drop.h0;
    if (dirs.cols() > 0) {
        // null-steering: restrict the beam to the complement of H0^H d_i so
        // the desired signal arrives orthogonal to every interference
        CMat w(drop.h0.cols(), dirs.cols());
        for (Eigen::Index k = 0; k < dirs.cols(); ++k) {
            w.col(k) = drop.h0.adjoint() * dirs.col(k);
        }
        const CMat wb = span_basis(w);
        constrained = drop.h0 - (drop.h0 * wb) * wb.adjoint();
    }

    const auto svd_c = numkit::svd(constrained);
    if (svd_c.sigma(0) <= kParallelTol * an.svd0.sigma(0)) {
        r.feasible = false;
        r.fallback_applied = fb;
        const FilteredLink fl = fallback_link(drop, an, fb);
        r.desired_power = fl.desired;
        r.residual_interference = fl.residual;
        r.se_bits = fl.se;
        return r;
    }

    const CVec p = svd_c.v.col(0);
    const CVec e = drop.h0 * p;
    const CVec f = e.normalized();
    r.desired_power = an.p0e * std::norm(numkit::inner(f, e));
    for (std::size_t n = 0; n < an.i_raw.size(); ++n) {
        r.residual_interference += an.p1n[n] * std::norm(numkit::inner(f, an.i_raw[n]));
    }
    r.se_bits = shannon_se(r.desired_power, r.residual_interference, an.sigma2);
    return r;
}

SchemeResult in_scheme(const Drop& drop, Fallback fb)
{
    return in_scheme(drop, analyze(drop), fb);
}

SchemeResult in_scheme(const Drop& drop, const DropAnalysis& an, Fallback fb)
{
    SchemeResult r;
    r.scheme = Scheme::IN;
    const ModeGeometry& m = an.mode0();

    double overhead = 0.0;
    double residual = 0.0;
    for (std::size_t n = 0; n < an.i_raw.size(); ++n) {
        const CVec t = an.h0_pinv * an.i_raw[n];
        overhead += an.p1n[n] * t.squaredNorm();
        residual += an.p1n[n] * std::norm(numkit::inner(m.f, an.i_raw[n] - drop.h0 * t));
    }
    r.power_overhead_e = overhead;

    if (overhead > an.p0e) {
        r.feasible = false;
        r.fallback_applied = fb;
        const FilteredLink fl = fallback_link(drop, an, fb);
        r.desired_power = fl.desired;
        r.residual_interference = fl.residual;
        r.se_bits = fl.se;
        return r;
    }

    r.residual_interference = residual;
    r.desired_power = (an.p0e - overhead) * m.lambda * m.lambda;
    r.se_bits = shannon_se(r.desired_power, r.residual_interference, an.sigma2);
    return r;
}

SchemeResult ois(const Drop& drop, Fallback fb)
{
    return ois(drop, analyze(drop), fb);
}

SchemeResult ois(const Drop& drop, const DropAnalysis& an, Fallback fb)
{
    return steered_result(drop, an, std::vector<double>(an.i_raw.size(), 1.0), Scheme::OIS, fb);
}

SchemeResult is_fixed(const Drop& drop, double rho, Fallback fb)
{
    return is_fixed(drop, analyze(drop), rho, fb);
}

SchemeResult is_fixed(const Drop& drop, const DropAnalysis& an, double rho, Fallback fb)
{
    if (!(rho > 0.0 && rho <= 1.0)) {
        throw std::domain_error("is_fixed: rho must lie in (0, 1]");
    }
    return steered_result(drop, an, std::vector<double>(an.i_raw.size(), rho), Scheme::IS_FIXED,
                          fb);
}

SchemeResult multi_stream_fixed_rho(const Drop& drop, const DropAnalysis& an,
                                    const std::vector<double>& stream_powers, double rho,
                                    Scheme tag, Fallback fb)
{
    (void)drop;
    (void)fb;
    const std::size_t m_streams = an.modes.size();
    if (an.i_raw.size() != 1) {
        throw std::domain_error("multi_stream_fixed_rho: single interference required");
    }
    if (stream_powers.size() != m_streams) {
        throw std::domain_error("multi_stream_fixed_rho: one power per stream required");
    }
    double total = 0.0;
    for (double p : stream_powers) {
        total += p;
    }
    if (std::abs(total - an.p0e) > 1e-9 * std::max(an.p0e, 1.0)) {
        throw std::domain_error("multi_stream_fixed_rho: stream powers must sum to p0e");
    }

    SchemeResult r;
    r.scheme = tag;
    if (tag == Scheme::IS_FIXED) {
        r.rho = rho;
        r.rhos.assign(m_streams, rho);
    }

    // feasibility is per stream against its own budget; the whole scheme
    // switches to non-IM when any stream runs out of power
    double overhead_total = 0.0;
    for (std::size_t m = 0; m < m_streams; ++m) {
        overhead_total += rho * rho * an.p1n[0] * an.modes[m].g_norm2[0];
    }
    r.power_overhead_e = overhead_total;
    bool feasible = true;
    for (std::size_t m = 0; m < m_streams; ++m) {
        if (rho * rho * an.p1n[0] * an.modes[m].g_norm2[0] > stream_powers[m]) {
            feasible = false;
            break;
        }
    }

    if (!feasible) {
        r.feasible = false;
        r.fallback_applied = Fallback::MF;
        for (std::size_t m = 0; m < m_streams; ++m) {
            const ModeGeometry& mode = an.modes[m];
            const double desired = stream_powers[m] * mode.lambda * mode.lambda;
            const double residual = an.p1n[0] * std::norm(mode.chi[0]);
            r.desired_power += desired;
            r.residual_interference += residual;
            r.se_bits += shannon_se(desired, residual, an.sigma2);
        }
        return r;
    }

    for (std::size_t m = 0; m < m_streams; ++m) {
        const ModeGeometry& mode = an.modes[m];
        const double overhead = rho * rho * an.p1n[0] * mode.g_norm2[0];
        const double keep = 1.0 - rho;
        const double residual = keep * keep * an.p1n[0] * std::norm(mode.chi[0]);
        const double desired = (stream_powers[m] - overhead) * mode.lambda * mode.lambda;
        r.desired_power += desired;
        r.residual_interference += residual;
        r.se_bits += shannon_se(desired, residual, an.sigma2);
    }
    return r;
}

SchemeResult in_multi_stream(const Drop& drop, const DropAnalysis& an,
                             const std::vector<double>& stream_powers, Fallback fb)
{
    (void)fb;
    const std::size_t m_streams = an.modes.size();
    if (an.i_raw.size() != 1) {
        throw std::domain_error("in_multi_stream: single interference required");
    }
    if (stream_powers.size() != m_streams) {
        throw std::domain_error("in_multi_stream: one power per stream required");
    }

    SchemeResult r;
    r.scheme = Scheme::IN;
    const CVec t = an.h0_pinv * an.i_raw[0];
    const double overhead = an.p1n[0] * t.squaredNorm();
    r.power_overhead_e = overhead;

    if (overhead > an.p0e) {
        r.feasible = false;
        r.fallback_applied = Fallback::MF;
        for (std::size_t m = 0; m < m_streams; ++m) {
            const ModeGeometry& mode = an.modes[m];
            const double desired = stream_powers[m] * mode.lambda * mode.lambda;
            const double residual = an.p1n[0] * std::norm(mode.chi[0]);
            r.desired_power += desired;
            r.residual_interference += residual;
            r.se_bits += shannon_se(desired, residual, an.sigma2);
        }
        return r;
    }

    const CVec leak = an.i_raw[0] - drop.h0 * t;
    const double scale = (an.p0e - overhead) / an.p0e;
    for (std::size_t m = 0; m < m_streams; ++m) {
        const ModeGeometry& mode = an.modes[m];
        const double desired = scale * stream_powers[m] * mode.lambda * mode.lambda;
        const double residual = an.p1n[0] * std::norm(numkit::inner(mode.f, leak));
        r.desired_power += desired;
        r.residual_interference += residual;
        r.se_bits += shannon_se(desired, residual, an.sigma2);
    }
    return r;
}

} // namespace steersim::schemes

#ifndef STEERSIM_SCHEMES_HPP
#define STEERSIM_SCHEMES_HPP

#include "steersim/channel.hpp"
#include "steersim/numkit.hpp"

#include <optional>
#include <string>
#include <vector>

namespace steersim::schemes {

using channel::Drop;

enum class Scheme { MF, ZF, ZFBF, IN, OIS, IS_FIXED, DIS };

/// Scheme applied when the steering power demand exceeds the PBS budget.
enum class Fallback { MF, ZF };

std::string name(Scheme s);
std::optional<Scheme> parse_scheme(const std::string& text);
std::string name(Fallback f);
std::optional<Fallback> parse_fallback(const std::string& text);

/// Outcome of one interference-management scheme on one drop.
///
/// On fallback, se_bits / desired_power / residual_interference describe the
/// fallback scheme at full transmit power while power_overhead_e keeps the
/// cost the original scheme demanded; feasible is false and fallback_applied
/// names the substitute.
struct SchemeResult {
    Scheme scheme = Scheme::MF;
    bool feasible = true;
    std::optional<double> rho;          ///< present for IS_FIXED / DIS only
    std::vector<double> rhos;           ///< per-component factors when N>1 or M>1
    double power_overhead_e = 0.0;      ///< steering spend, noise-normalized
    double residual_interference = 0.0; ///< post-filter interference power
    double desired_power = 0.0;         ///< post-filter desired-signal power
    double se_bits = 0.0;
    std::optional<Fallback> fallback_applied;
};

/// Interference decomposition at the PUE for the principal desired stream.
struct SteeringGeometry {
    CVec d_s;    ///< unit desired direction H0 p0 / |H0 p0|
    CVec i_vec;  ///< sqrt(p1e) H10 p1
    CVec i_in;   ///< in-phase component P i_vec
    CVec i_quad; ///< quadrature remainder
    CVec g;      ///< H0^+ P H10 p1
    cplx chi;    ///< f0^H P H10 p1
};

/// Per-desired-stream geometry shared by every scheme on a drop.
struct ModeGeometry {
    double lambda = 0.0; ///< singular value of the mode
    CVec f;              ///< receive filter u0^(m)
    CVec d_s;
    CMat proj;                   ///< projector(d_s)
    std::vector<cplx> chi;       ///< per interference
    std::vector<CVec> g;         ///< per interference
    std::vector<double> g_norm2; ///< |g_n|^2
};

struct DropAnalysis {
    numkit::SvdResult svd0;
    CMat h0_pinv;
    std::vector<CVec> i_raw; ///< h10 * p1_n, unscaled
    std::vector<double> p1n; ///< per-interference effective power
    double p0e = 0.0;
    double p1e = 0.0;
    double sigma2 = 1.0;
    std::vector<ModeGeometry> modes;

    const ModeGeometry& mode0() const { return modes.front(); }
};

/// Decompose the drop once; every scheme below accepts the result so a
/// sweep evaluates many schemes per drop without repeating the SVD.
DropAnalysis analyze(const Drop& drop, int m_streams = 1);

SteeringGeometry geometry(const Drop& drop);

double shannon_se(double desired_power, double residual, double sigma2);

/// Steered-transmission result for one rho per interference; rho = 0 is
/// matched filtering, rho = 1 is OIS. Shared by IS_FIXED/OIS/DIS so their
/// spectral efficiencies stay exactly comparable.
SchemeResult steered_result(const Drop& drop, const DropAnalysis& an,
                            const std::vector<double>& rho_per_interference, Scheme tag,
                            Fallback fb);

SchemeResult mf(const Drop& drop);
SchemeResult mf(const Drop& drop, const DropAnalysis& an);

SchemeResult zf_rx(const Drop& drop);
SchemeResult zf_rx(const Drop& drop, const DropAnalysis& an);

SchemeResult zfbf(const Drop& drop, Fallback fb = Fallback::ZF);
SchemeResult zfbf(const Drop& drop, const DropAnalysis& an, Fallback fb = Fallback::ZF);

SchemeResult in_scheme(const Drop& drop, Fallback fb = Fallback::ZF);
SchemeResult in_scheme(const Drop& drop, const DropAnalysis& an, Fallback fb = Fallback::ZF);

SchemeResult ois(const Drop& drop, Fallback fb = Fallback::ZF);
SchemeResult ois(const Drop& drop, const DropAnalysis& an, Fallback fb = Fallback::ZF);

SchemeResult is_fixed(const Drop& drop, double rho, Fallback fb = Fallback::ZF);
SchemeResult is_fixed(const Drop& drop, const DropAnalysis& an, double rho,
                      Fallback fb = Fallback::ZF);

/// M desired streams, fixed per-stream steering factor (0 = MF, 1 = OIS).
/// stream_powers must sum to p0e. Single interference only.
SchemeResult multi_stream_fixed_rho(const Drop& drop, const DropAnalysis& an,
                                    const std::vector<double>& stream_powers, double rho,
                                    Scheme tag, Fallback fb);

/// M desired streams under interference neutralization: one steering signal
/// cancels the interference vector for every receive filter; the remaining
/// power is split equally across streams.
SchemeResult in_multi_stream(const Drop& drop, const DropAnalysis& an,
                             const std::vector<double>& stream_powers,
                             Fallback fb = Fallback::ZF);

/// The configured fallback scheme run at full transmit power.
SchemeResult fallback_result(const Drop& drop, const DropAnalysis& an, Fallback fb);

} // namespace steersim::schemes

#endif

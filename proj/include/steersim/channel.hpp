#ifndef STEERSIM_CHANNEL_HPP
#define STEERSIM_CHANNEL_HPP

#include "steersim/numkit.hpp"

#include <cstdint>
#include <vector>

namespace steersim::channel {

/// Two-tier macro/pico deployment geometry and radio parameters.
struct Deployment {
    int n_t0 = 2; ///< PBS transmit antennas
    int n_t1 = 2; ///< MBS transmit antennas
    int n_r0 = 2; ///< PUE receive antennas
    double p0_dbm = 23.0;   ///< PBS transmit power
    double p1_dbm = 46.0;   ///< MBS transmit power
    double eta0_m = 150.0;  ///< PBS -> PUE distance
    double eta10_m = 1500.0; ///< MBS -> PUE distance
    double d_m = 300.0;     ///< pico cell radius
    double big_d_m = 3000.0; ///< macro cell radius

    void validate() const;
};

/// Effective link powers as seen by the PUE, in linear units.
/// p0e/p1e are transmit powers folded with path loss; when produced by
/// budget_normalized() they are already noise-normalized (sigma2 = 1).
struct LinkBudget {
    double p0e = 1.0;
    double p1e = 1.0;
    double sigma2 = 1.0;

    double gamma_bar_db() const; ///< 10 log10(p1e / sigma2)
    double xi() const;           ///< p0e / p1e
};

/// Counter-based splittable random stream. A stream is a pure function of
/// its key, so any (master_seed, point, drop) cell of a campaign can be
/// regenerated in isolation and results do not depend on thread count.
class RngStream {
public:
    explicit RngStream(std::uint64_t key);
    static RngStream for_drop(std::uint64_t master_seed, std::uint64_t point_index,
                              std::uint64_t drop_index);

    std::uint64_t key() const { return key_; }

    std::uint64_t next_u64();
    double uniform();  ///< (0, 1]
    cplx cgauss();     ///< circularly-symmetric complex Gaussian, unit variance

private:
    std::uint64_t key_;
    std::uint64_t state_;
};

/// One Monte-Carlo channel realization plus its link budget.
struct Drop {
    CMat h0;  ///< PBS -> PUE, n_r0 x n_t0
    CMat h1;  ///< MBS -> MUE, n_r1 x n_t1
    CMat h10; ///< MBS -> PUE, n_r0 x n_t1
    LinkBudget budget;
    std::vector<CVec> mbs_precoders;       ///< unit-norm columns of V1
    std::vector<double> mbs_stream_powers; ///< sums to p1e
    std::uint64_t seed = 0;

    int n_interferences() const { return static_cast<int>(mbs_precoders.size()); }
};

/// Antenna counts for drops built from a normalized budget.
struct AntennaConfig {
    int n_t0 = 2;
    int n_t1 = 2;
    int n_r0 = 2;
    int n_r1 = 0; ///< 0 means "same as n_t1"

    void validate() const;
};

/// i.i.d. CN(0,1) entries (real/imag parts each variance 1/2).
CMat rayleigh(int rows, int cols, RngStream& rng);

/// L10 = 128.1 + 37.6 log10(eta10 / 1000) dB
double path_loss_mbs_db(double eta10_m);
/// L0 = 38 + 30 log10(eta0) dB
double path_loss_pbs_db(double eta0_m);

LinkBudget budget_from_deployment(const Deployment& dep, double sigma2_dbm);

/// sigma2 = 1, p1e = 10^(gamma_bar_db/10), p0e = xi * p1e.
LinkBudget budget_normalized(double gamma_bar_db, double xi);

/// Draw h0, h1, h10 and derive the MBS precoders (first n_streams_mbs right
/// singular vectors of h1). Stream powers split p1e equally unless an
/// explicit split is given.
Drop make_drop(const LinkBudget& budget, const AntennaConfig& ant, int n_streams_mbs,
               RngStream& rng, const std::vector<double>& stream_power_override = {});

Drop make_drop(const Deployment& dep, double sigma2_dbm, int n_streams_mbs, RngStream& rng);

} // namespace steersim::channel

#endif

#include "steersim/channel.hpp"

#include <cmath>
#include <numbers>

namespace steersim::channel {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z)
{
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t combine(std::uint64_t a, std::uint64_t b)
{
    return mix64(a ^ (b + kGolden + (a << 6) + (a >> 2)));
}

double db_to_linear(double db)
{
    return std::pow(10.0, 0.1 * db);
}

} // namespace

void Deployment::validate() const
{
    if (!(n_t0 >= n_r0 && n_r0 >= 2)) {
        throw std::domain_error("Deployment: requires n_t0 >= n_r0 >= 2");
    }
    if (n_t1 < 2) {
        throw std::domain_error("Deployment: requires n_t1 >= 2");
    }
    if (!(eta0_m > 0.0 && eta0_m <= d_m)) {
        throw std::domain_error("Deployment: requires 0 < eta0_m <= d_m");
    }
    if (!(eta10_m > 0.0 && eta10_m <= big_d_m)) {
        throw std::domain_error("Deployment: requires 0 < eta10_m <= big_d_m");
    }
}

void AntennaConfig::validate() const
{
    if (!(n_t0 >= n_r0 && n_r0 >= 2)) {
        throw std::domain_error("AntennaConfig: requires n_t0 >= n_r0 >= 2");
    }
    if (n_t1 < 2) {
        throw std::domain_error("AntennaConfig: requires n_t1 >= 2");
    }
    if (n_r1 < 0) {
        throw std::domain_error("AntennaConfig: n_r1 must be >= 0");
    }
}

double LinkBudget::gamma_bar_db() const
{
    return 10.0 * std::log10(p1e / sigma2);
}

double LinkBudget::xi() const
{
    return p0e / p1e;
}

RngStream::RngStream(std::uint64_t key) : key_(key), state_(key) {}

RngStream RngStream::for_drop(std::uint64_t master_seed, std::uint64_t point_index,
                              std::uint64_t drop_index)
{
    return RngStream(combine(combine(master_seed, point_index), drop_index));
}

std::uint64_t RngStream::next_u64()
{
    state_ += kGolden;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double RngStream::uniform()
{
    // 53-bit mantissa, shifted into (0, 1]
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

cplx RngStream::cgauss()
{
    // polar form: amplitude sqrt(-ln u) is Rayleigh, phase uniform,
    // giving exactly CN(0, 1)
    const double u = uniform();
    const double r = std::sqrt(-std::log(u));
    const double theta = 2.0 * std::numbers::pi * uniform();
    return {r * std::cos(theta), r * std::sin(theta)};
}

CMat rayleigh(int rows, int cols, RngStream& rng)
{
    if (rows < 1 || cols < 1) {
        throw std::domain_error("rayleigh: dimensions must be positive");
    }
    CMat h(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            h(i, j) = rng.cgauss();
        }
    }
    return h;
}

double path_loss_mbs_db(double eta10_m)
{
    if (eta10_m <= 0.0) {
        throw std::domain_error("path_loss_mbs_db: distance must be positive");
    }
    return 128.1 + 37.6 * std::log10(eta10_m / 1e3);
}

double path_loss_pbs_db(double eta0_m)
{
    if (eta0_m <= 0.0) {
        throw std::domain_error("path_loss_pbs_db: distance must be positive");
    }
    return 38.0 + 30.0 * std::log10(eta0_m);
}

LinkBudget budget_from_deployment(const Deployment& dep, double sigma2_dbm)
{
    dep.validate();
    LinkBudget b;
    b.p0e = db_to_linear(dep.p0_dbm - path_loss_pbs_db(dep.eta0_m));
    b.p1e = db_to_linear(dep.p1_dbm - path_loss_mbs_db(dep.eta10_m));
    b.sigma2 = db_to_linear(sigma2_dbm);
    return b;
}

LinkBudget budget_normalized(double gamma_bar_db, double xi)
{
    if (xi <= 0.0) {
        throw std::domain_error("budget_normalized: xi must be positive");
    }
    LinkBudget b;
    b.sigma2 = 1.0;
    b.p1e = db_to_linear(gamma_bar_db);
    b.p0e = xi * b.p1e;
    return b;
}

Drop make_drop(const LinkBudget& budget, const AntennaConfig& ant, int n_streams_mbs,
               RngStream& rng, const std::vector<double>& stream_power_override)
{
    ant.validate();
    const int n_r1 = ant.n_r1 > 0 ? ant.n_r1 : ant.n_t1;
    if (n_streams_mbs < 1 || n_streams_mbs > std::min(ant.n_t1, n_r1)) {
        throw std::domain_error("make_drop: n_streams_mbs must be in [1, min(n_t1, n_r1)]");
    }

    Drop drop;
    drop.seed = rng.key();
    drop.budget = budget;
    drop.h0 = rayleigh(ant.n_r0, ant.n_t0, rng);
    drop.h1 = rayleigh(n_r1, ant.n_t1, rng);
    drop.h10 = rayleigh(ant.n_r0, ant.n_t1, rng);

    const auto svd1 = numkit::svd(drop.h1);
    drop.mbs_precoders.reserve(n_streams_mbs);
    for (int n = 0; n < n_streams_mbs; ++n) {
        drop.mbs_precoders.push_back(svd1.v.col(n));
    }

    if (!stream_power_override.empty()) {
        if (static_cast<int>(stream_power_override.size()) != n_streams_mbs) {
            throw std::domain_error("make_drop: stream power override length mismatch");
        }
        double total = 0.0;
        for (double p : stream_power_override) {
            if (p < 0.0) {
                throw std::domain_error("make_drop: stream powers must be nonnegative");
            }
            total += p;
        }
        if (std::abs(total - budget.p1e) > 1e-9 * budget.p1e) {
            throw std::domain_error("make_drop: stream powers must sum to p1e");
        }
        drop.mbs_stream_powers = stream_power_override;
    } else {
        drop.mbs_stream_powers.assign(n_streams_mbs, budget.p1e / n_streams_mbs);
    }
    return drop;
}

Drop make_drop(const Deployment& dep, double sigma2_dbm, int n_streams_mbs, RngStream& rng)
{
    AntennaConfig ant{dep.n_t0, dep.n_t1, dep.n_r0, 0};
    return make_drop(budget_from_deployment(dep, sigma2_dbm), ant, n_streams_mbs, rng);
}

} // namespace steersim::channel

#include "doctest.h"

#include "steersim/steering.hpp"

#include <cmath>

using namespace steersim;
using namespace steersim::steering;
using channel::Drop;
using channel::LinkBudget;
using channel::RngStream;
using schemes::Scheme;

namespace {

Drop seeded_drop(double gamma_bar_db, double xi, std::uint64_t drop_index, int n_streams = 1)
{
    RngStream rng = RngStream::for_drop(0x0e11, 0, drop_index);
    return channel::make_drop(channel::budget_normalized(gamma_bar_db, xi), {}, n_streams, rng);
}

double h_quadratic(const RhoCoefficients& k, double rho)
{
    return 0.5 * k.b * k.d * rho * rho - (k.b * k.c + k.a * k.e) * rho + 0.5 * k.a * k.d;
}

} // namespace

TEST_CASE("sinr_dis endpoints: non-IM at rho = 0, orthogonal steering at rho = 1")
{
    const RhoCoefficients k{12.0, 3.0, 5.0, 8.0, 4.0};
    CHECK(sinr_dis(k, 0.0) == doctest::Approx(12.0 / 5.0).epsilon(1e-15));
    // c - d + e is the noise floor once the in-phase part is gone
    CHECK(sinr_dis(k, 1.0) == doctest::Approx((12.0 - 3.0) / (5.0 - 8.0 + 4.0)).epsilon(1e-15));
    CHECK_THROWS_AS((void)sinr_dis(k, -0.1), std::domain_error);
    CHECK_THROWS_AS((void)sinr_dis(k, 1.1), std::domain_error);
}

TEST_CASE("sinr_dis agrees with the SINR built directly from the drop vectors")
{
    for (std::uint64_t i = 0; i < 100; ++i) {
        const Drop drop = seeded_drop(5.0, 1.0, i);
        const auto geo = schemes::geometry(drop);
        const auto s = numkit::svd(drop.h0);
        const double lam2 = s.sigma(0) * s.sigma(0);
        const double chi2 = std::norm(geo.chi);
        const double g2 = geo.g.squaredNorm();
        const auto k = coefficients_for(drop);
        for (double rho : {0.0, 0.3, 0.7, 1.0}) {
            const double direct =
                (drop.budget.p0e - rho * rho * drop.budget.p1e * g2) * lam2 /
                ((1.0 - rho) * (1.0 - rho) * drop.budget.p1e * chi2 + drop.budget.sigma2);
            CHECK(sinr_dis(k, rho) == doctest::Approx(direct).epsilon(1e-12));
        }
    }
}

TEST_CASE("coefficient identities")
{
    for (std::uint64_t i = 0; i < 50; ++i) {
        const Drop drop = seeded_drop(10.0, 0.5, i);
        const auto k = coefficients_for(drop);
        CHECK(k.d == 2.0 * k.e); // exact by construction
        CHECK(k.a > 0.0);
        CHECK(k.c > k.e);
        CHECK(k.c - k.d + k.e == doctest::Approx(drop.budget.sigma2).epsilon(1e-12));
    }
}

TEST_CASE("rho_max caps at one and follows the power ratio")
{
    const Drop rich = seeded_drop(0.0, 1e6, 1);
    CHECK(rho_max(rich) == 1.0);

    // engineer p0e = 0.25 p1e |g|^2 so the cap is exactly 1/2
    Drop drop = seeded_drop(5.0, 1.0, 2);
    const auto geo = schemes::geometry(drop);
    const double g2 = geo.g.squaredNorm();
    drop.budget.p0e = 0.25 * drop.budget.p1e * g2;
    CHECK(rho_max(drop) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("closed-form rho* maximizes the SINR against a dense grid")
{
    for (std::uint64_t i = 0; i < 200; ++i) {
        const Drop drop = seeded_drop(5.0, 1.0, i);
        const auto sol = optimal_rho(drop);
        if (sol.degenerate) {
            continue;
        }
        const auto k = coefficients_for(drop);
        double best_rho = 0.0;
        double best_phi = -1.0;
        for (double rho = 1e-4; rho <= sol.rho_max; rho += 1e-4) {
            const double phi = sinr_dis(k, rho);
            if (phi > best_phi) {
                best_phi = phi;
                best_rho = rho;
            }
        }
        CHECK(std::abs(best_rho - sol.rho_star) <= 1e-3);
        CHECK(sol.sinr_at_star + 1e-12 >= best_phi);
    }
}

TEST_CASE("rho solution invariants: positive discriminant, rejected large root")
{
    int checked = 0;
    for (std::uint64_t i = 0; i < 500; ++i) {
        const double gamma = static_cast<double>(i % 7) * 5.0;
        const double xi = std::pow(10.0, static_cast<double>(i % 5) - 2.0);
        RngStream rng = RngStream::for_drop(0xcafe, i % 7, i);
        const Drop drop =
            channel::make_drop(channel::budget_normalized(gamma, xi), {}, 1, rng);
        const auto sol = optimal_rho(drop);
        if (sol.degenerate) {
            continue;
        }
        ++checked;
        const auto k = coefficients_for(drop);
        const double s = k.b * k.c + k.a * k.e;
        CHECK(s * s - k.a * k.b * k.d * k.d > 0.0);
        CHECK(rho_plus(k) > sol.rho_max);
        CHECK(sol.rho_star > 0.0);
        CHECK(sol.rho_star <= sol.rho_max);
        CHECK_FALSE(sol.clamped);

        // the stationarity quadratic changes sign exactly once inside (0, rho_max)
        const double left = sol.rho_star * (1.0 - 1e-3);
        const double right = sol.rho_star * (1.0 + 1e-3);
        CHECK(h_quadratic(k, left) > 0.0);
        if (right < sol.rho_max) {
            CHECK(h_quadratic(k, right) < 0.0);
        }
    }
    CHECK(checked > 400);
}

TEST_CASE("degenerate interference yields rho* = 0 and plain matched filtering")
{
    const LinkBudget budget = channel::budget_normalized(5.0, 1.0);
    CMat h0 = CMat::Zero(2, 2);
    h0(0, 0) = 2.0;
    h0(1, 1) = 1.0;
    CMat h10 = CMat::Zero(2, 2);
    h10(1, 0) = 1.0; // interference orthogonal to the desired direction
    Drop drop;
    drop.h0 = h0;
    drop.h10 = h10;
    drop.h1 = CMat::Identity(2, 2);
    drop.budget = budget;
    drop.mbs_precoders = {CVec::Zero(2)};
    drop.mbs_precoders[0](0) = 1.0;
    drop.mbs_stream_powers = {budget.p1e};

    const auto sol = optimal_rho(drop);
    CHECK(sol.degenerate);
    CHECK(sol.rho_star == 0.0);
    CHECK(sol.rho_max == 1.0);

    const auto d = dis(drop);
    CHECK(d.scheme == Scheme::DIS);
    CHECK(d.rho == 0.0);
    CHECK(d.se_bits == doctest::Approx(schemes::mf(drop).se_bits).epsilon(1e-12));
    CHECK(d.power_overhead_e == 0.0);
}

TEST_CASE("dis never loses to ois or mf on any drop")
{
    for (std::uint64_t i = 0; i < 300; ++i) {
        for (double xi : {0.1, 1.0, 100.0}) {
            RngStream rng = RngStream::for_drop(0xd15, static_cast<std::uint64_t>(xi * 10), i);
            const Drop drop =
                channel::make_drop(channel::budget_normalized(10.0, xi), {}, 1, rng);
            const auto an = schemes::analyze(drop, 1);
            const auto d = dis(drop, an);
            const auto o = schemes::ois(drop, an);
            const auto m = schemes::mf(drop, an);
            CHECK(d.feasible);
            CHECK(d.se_bits >= m.se_bits);
            if (o.feasible) {
                CHECK(d.se_bits >= o.se_bits);
            }
            CHECK(d.power_overhead_e <= drop.budget.p0e);
            // overhead identity at the chosen factor
            const auto geo = schemes::geometry(drop);
            const double expect =
                *d.rho * *d.rho * drop.budget.p1e * geo.g.squaredNorm();
            CHECK(d.power_overhead_e == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("dis approaches ois as the budget grows unbounded")
{
    const Drop drop = seeded_drop(5.0, 1e6, 3);
    const auto d = dis(drop);
    const auto o = schemes::ois(drop);
    REQUIRE(o.feasible);
    CHECK(d.se_bits >= o.se_bits);
    CHECK(d.se_bits == doctest::Approx(o.se_bits).epsilon(1e-6));
    CHECK(*d.rho > 0.999);
}

TEST_CASE("single-interference budget recovers dis in the full-budget limit")
{
    const Drop drop = seeded_drop(5.0, 1.0, 4);
    const auto full = dis(drop);
    const std::vector<double> budgets{drop.budget.p0e * (1.0 - 1e-9)};
    const auto limited = dis_multi_interference(drop, budgets);
    CHECK(std::abs(*limited.rho - *full.rho) <= 1e-6);
    CHECK(limited.se_bits == doctest::Approx(full.se_bits).epsilon(1e-9));
}

TEST_CASE("a zero-power second interference changes nothing")
{
    const LinkBudget budget = channel::budget_normalized(5.0, 1.0);
    RngStream rng = RngStream::for_drop(0xaa, 0, 5);
    const Drop two = channel::make_drop(budget, {}, 2, rng,
                                        {budget.p1e, 0.0});
    Drop one = two;
    one.mbs_precoders.pop_back();
    one.mbs_stream_powers.pop_back();

    const double b = budget.p0e / 2.0;
    const auto res_two = dis_multi_interference(two, std::vector<double>{b, budget.p0e - b});
    const auto res_one = dis_multi_interference(one, std::vector<double>{b});
    CHECK(res_two.se_bits == res_one.se_bits);
    CHECK(res_two.power_overhead_e == res_one.power_overhead_e);
    CHECK(res_two.rhos[1] == 0.0);
}

TEST_CASE("multi-interference result matches the explicitly assembled receive vector")
{
    for (std::uint64_t i = 0; i < 100; ++i) {
        RngStream rng = RngStream::for_drop(0xbb, 0, i);
        const LinkBudget budget = channel::budget_normalized(5.0, 1.0);
        const Drop drop = channel::make_drop(budget, {}, 2, rng);
        const std::vector<double> budgets(2, budget.p0e / 2.0);
        const auto res = dis_multi_interference(drop, budgets);

        const auto s = numkit::svd(drop.h0);
        const CVec f0 = s.u.col(0);
        const CVec d_s = (drop.h0 * s.v.col(0)).normalized();
        const CMat proj = numkit::projector(d_s);
        const CMat h0_pinv = numkit::pinv(drop.h0);

        double overhead = 0.0;
        double residual = 0.0;
        for (int n = 0; n < 2; ++n) {
            const std::size_t un = static_cast<std::size_t>(n);
            const double rho_n = res.rhos[un];
            const CVec i_raw = drop.h10 * drop.mbs_precoders[un];
            const CVec g_n = h0_pinv * (proj * i_raw);
            overhead += rho_n * rho_n * drop.mbs_stream_powers[un] * g_n.squaredNorm();
            const CVec steered =
                std::sqrt(drop.mbs_stream_powers[un]) * (i_raw - rho_n * (proj * i_raw));
            residual += std::norm(numkit::inner(f0, steered));
        }
        const double desired = (budget.p0e - overhead) * s.sigma(0) * s.sigma(0);
        const double se = std::log2(1.0 + desired / (budget.sigma2 + residual));
        CHECK(res.se_bits == doctest::Approx(se).epsilon(1e-9));
        CHECK(res.power_overhead_e == doctest::Approx(overhead).epsilon(1e-9));
    }
}

TEST_CASE("multi-interference budgets are validated")
{
    RngStream rng = RngStream::for_drop(0xcc, 0, 0);
    const LinkBudget budget = channel::budget_normalized(5.0, 1.0);
    const Drop drop = channel::make_drop(budget, {}, 2, rng);
    CHECK_THROWS_AS((void)dis_multi_interference(drop, std::vector<double>{budget.p0e}),
                    std::domain_error);
    CHECK_THROWS_AS(
        (void)dis_multi_interference(drop, std::vector<double>{budget.p0e, budget.p0e}),
        std::domain_error);
    CHECK_THROWS_AS(
        (void)dis_multi_interference(drop, std::vector<double>{-1.0, budget.p0e / 2.0}),
        std::domain_error);
}

TEST_CASE("joint optimization separates when the interferences decouple")
{
    // both interferences orthogonal to the desired direction: nothing to steer
    CMat h0 = CMat::Zero(3, 3);
    h0(0, 0) = 3.0;
    h0(1, 1) = 2.0;
    h0(2, 2) = 1.0;
    CMat h10 = CMat::Zero(3, 2);
    h10(1, 0) = 1.0;
    h10(2, 1) = 1.0;
    Drop drop;
    drop.h0 = h0;
    drop.h10 = h10;
    drop.h1 = CMat::Identity(2, 2);
    drop.budget = channel::budget_normalized(5.0, 1.0);
    drop.mbs_precoders = {CVec::Zero(2), CVec::Zero(2)};
    drop.mbs_precoders[0](0) = 1.0;
    drop.mbs_precoders[1](1) = 1.0;
    drop.mbs_stream_powers = {drop.budget.p1e / 2.0, drop.budget.p1e / 2.0};

    const auto j = joint_rho_n2(drop);
    CHECK(j.rho1 == 0.0);
    CHECK(j.rho2 == 0.0);
    CHECK(j.se == doctest::Approx(std::log2(1.0 + drop.budget.p0e * 9.0)).epsilon(1e-12));
}

TEST_CASE("joint optimum matches a two-dimensional grid search")
{
    for (std::uint64_t i = 0; i < 20; ++i) {
        RngStream rng = RngStream::for_drop(17, 0, i);
        const Drop drop =
            channel::make_drop(channel::budget_normalized(5.0, 1.0), {}, 2, rng);
        const auto an = schemes::analyze(drop, 1);
        const auto j = joint_rho_n2(drop, an);

        const auto& m = an.mode0();
        const double b1 = an.p1n[0] * m.g_norm2[0];
        const double b2 = an.p1n[1] * m.g_norm2[1];
        const double e1 = an.p1n[0] * std::norm(m.chi[0]);
        const double e2 = an.p1n[1] * std::norm(m.chi[1]);
        const double lam2 = m.lambda * m.lambda;
        const double c1 = std::min(1.0, std::sqrt(an.p0e / b1));
        const double c2 = std::min(1.0, std::sqrt(an.p0e / b2));
        double best = -1.0;
        double br1 = 0.0;
        double br2 = 0.0;
        for (double r1 = 0.0; r1 <= c1; r1 += 1e-3) {
            for (double r2 = 0.0; r2 <= c2; r2 += 1e-3) {
                const double overhead = b1 * r1 * r1 + b2 * r2 * r2;
                if (overhead > an.p0e) {
                    continue;
                }
                const double num = (an.p0e - overhead) * lam2;
                const double den = an.sigma2 + e1 * (1.0 - r1) * (1.0 - r1) +
                                   e2 * (1.0 - r2) * (1.0 - r2);
                const double phi = num / den;
                if (phi > best) {
                    best = phi;
                    br1 = r1;
                    br2 = r2;
                }
            }
        }
        CHECK(std::abs(br1 - j.rho1) <= 1e-3);
        CHECK(std::abs(br2 - j.rho2) <= 1e-3);
        CHECK(j.se + 1e-9 >= std::log2(1.0 + best));
    }
}

TEST_CASE("joint optimization never underperforms independent per-budget factors")
{
    for (std::uint64_t i = 0; i < 200; ++i) {
        RngStream rng = RngStream::for_drop(19, 0, i);
        const Drop drop =
            channel::make_drop(channel::budget_normalized(10.0, 1.0), {}, 2, rng);
        const auto an = schemes::analyze(drop, 1);
        const auto j = joint_rho_n2(drop, an);
        const std::vector<double> budgets(2, drop.budget.p0e / 2.0);
        const auto indep = dis_multi_interference(drop, an, budgets);
        CHECK(j.se >= indep.se_bits);
    }
}

TEST_CASE("multi-stream dis with one stream is exactly dis")
{
    for (std::uint64_t i = 0; i < 50; ++i) {
        const Drop drop = seeded_drop(5.0, 1.0, i);
        const auto direct = dis(drop);
        const auto via_multi =
            dis_multi_stream(drop, std::vector<double>{drop.budget.p0e});
        CHECK(via_multi.se_bits == direct.se_bits);
        CHECK(via_multi.rho == direct.rho);
        CHECK(via_multi.power_overhead_e == direct.power_overhead_e);
    }
}

TEST_CASE("two-stream dis decomposes into independent per-stream optimizations")
{
    for (std::uint64_t i = 0; i < 50; ++i) {
        const Drop drop = seeded_drop(5.0, 1.0, i);
        const auto an = schemes::analyze(drop, 2);
        const std::vector<double> powers(2, drop.budget.p0e / 2.0);
        const auto res = dis_multi_stream(drop, an, powers);
        REQUIRE(res.rhos.size() == 2);

        double se = 0.0;
        for (int m = 0; m < 2; ++m) {
            const auto& mode = an.modes[static_cast<std::size_t>(m)];
            const double chi2 = std::norm(mode.chi[0]);
            const RhoCoefficients k = RhoCoefficients::from_link(
                powers[static_cast<std::size_t>(m)], an.p1n[0], an.sigma2, mode.lambda,
                mode.g_norm2[0], chi2);
            const auto sol = solve_rho(k);
            CHECK(std::abs(sol.rho_star - res.rhos[static_cast<std::size_t>(m)]) <= 1e-12);
            const double overhead =
                sol.rho_star * sol.rho_star * an.p1n[0] * mode.g_norm2[0];
            const double residual =
                (1.0 - sol.rho_star) * (1.0 - sol.rho_star) * an.p1n[0] * chi2;
            const double desired = (powers[static_cast<std::size_t>(m)] - overhead) *
                                   mode.lambda * mode.lambda;
            se += std::log2(1.0 + desired / (an.sigma2 + residual));
        }
        CHECK(res.se_bits == doctest::Approx(se).epsilon(1e-9));
        CHECK(res.rho ==
              doctest::Approx(0.5 * (res.rhos[0] + res.rhos[1])).epsilon(1e-12));
    }
}

TEST_CASE("multi-stream power vector is validated")
{
    const Drop drop = seeded_drop(5.0, 1.0, 9);
    CHECK_THROWS_AS(
        (void)dis_multi_stream(drop, std::vector<double>{drop.budget.p0e, drop.budget.p0e}),
        std::domain_error);
    CHECK_THROWS_AS((void)dis_multi_stream(drop, std::vector<double>{drop.budget.p0e / 2.0,
                                                                     drop.budget.p0e / 4.0}),
                    std::domain_error);
}

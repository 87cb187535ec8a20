#include "doctest.h"

#include "steersim/experiment.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace steersim;
using namespace steersim::experiment;
using channel::RngStream;

namespace {

SweepSpec tiny_spec()
{
    SweepSpec spec;
    spec.gamma_bar_db = {0.0, 10.0};
    spec.xi = {1.0};
    spec.schemes = {Scheme::MF, Scheme::DIS};
    spec.drops_per_point = 300;
    spec.master_seed = 21;
    return spec;
}

std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

struct TempDir {
    std::filesystem::path path;
    TempDir()
    {
        path = std::filesystem::temp_directory_path() /
               ("steersim_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("single-point single-drop sweep equals the direct scheme call")
{
    SweepSpec spec;
    spec.gamma_bar_db = {5.0};
    spec.xi = {2.0};
    spec.schemes = {Scheme::MF};
    spec.drops_per_point = 1;
    spec.master_seed = 31;
    const auto rows = run_sweep(spec, 1);
    REQUIRE(rows.size() == 1);

    RngStream rng = RngStream::for_drop(31, 0, 0);
    const auto drop = channel::make_drop(channel::budget_normalized(5.0, 2.0), {}, 1, rng);
    const auto direct = schemes::mf(drop);
    CHECK(rows[0].mean_se == direct.se_bits);
    CHECK(rows[0].n_drops == 1);
    CHECK(rows[0].stderr_se == 0.0);
    CHECK_FALSE(rows[0].mean_rho_star.has_value());
}

TEST_CASE("sweep output is identical across thread counts and reruns")
{
    const SweepSpec spec = tiny_spec();
    const std::string serial = csv_string(run_sweep(spec, 1));
    const std::string threaded = csv_string(run_sweep(spec, 4));
    const std::string again = csv_string(run_sweep(spec, 2));
    CHECK(serial == threaded);
    CHECK(serial == again);
}

TEST_CASE("csv format: header-only when empty, quoting and layout")
{
    const std::string empty = csv_string({});
    CHECK(empty ==
          "gamma_bar_db,xi,rho,n_t0,n_t1,n_r0,m_streams,n_interferences,scheme,mean_se,"
          "mean_rho_star,prob_overhead_exceeds,prob_infeasible,n_drops,stderr_se\n");

    SweepRow row;
    row.point = {5.0, 1.0, std::nullopt, 2, 2, 2, 1, 1};
    row.scheme = Scheme::DIS;
    row.mean_se = 1.0 / 3.0;
    row.mean_rho_star = 0.5;
    row.n_drops = 10;
    const std::string text = csv_string({row});
    CHECK(text.find("0.333333333333") != std::string::npos); // 12 significant digits
    CHECK(text.find(",dis,") != std::string::npos);
    // an absent rho axis leaves its column empty
    CHECK(text.find("5,1,,2,2,2,1,1,dis") != std::string::npos);
}

TEST_CASE("every requested scheme appears exactly once per grid point")
{
    SweepSpec spec = tiny_spec();
    spec.gamma_bar_db = {0.0, 5.0, 10.0};
    spec.xi = {0.5, 2.0};
    spec.schemes = {Scheme::MF, Scheme::ZF, Scheme::DIS};
    spec.drops_per_point = 5;
    const auto rows = run_sweep(spec, 2);
    CHECK(rows.size() == spec.point_count() * spec.schemes.size());
    int mf_rows = 0;
    for (const auto& r : rows) {
        if (r.scheme == Scheme::MF) {
            ++mf_rows;
        }
    }
    CHECK(mf_rows == static_cast<int>(spec.point_count()));
}

TEST_CASE("standard error shrinks like one over sqrt of the drop count")
{
    SweepSpec small = tiny_spec();
    small.gamma_bar_db = {5.0};
    small.schemes = {Scheme::DIS};
    small.drops_per_point = 400;
    SweepSpec big = small;
    big.drops_per_point = 6400;
    const double se_small = run_sweep(small, 2)[0].stderr_se;
    const double se_big = run_sweep(big, 2)[0].stderr_se;
    CHECK(se_small / se_big == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("rho sweep of fixed steering peaks where the closed form says it should")
{
    SweepSpec spec;
    spec.gamma_bar_db = {5.0};
    spec.xi = {1.0};
    spec.rho = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    spec.schemes = {Scheme::IS_FIXED, Scheme::DIS};
    spec.fallback = Fallback::MF; // the rho-sweep protocol switches IS off when starved
    spec.drops_per_point = 4000;
    spec.master_seed = 8;
    const auto rows = run_sweep(spec, 2);

    double best_rho = 0.0;
    double best_se = -1.0;
    double mean_rho_star = 0.0;
    for (const auto& r : rows) {
        if (r.scheme == Scheme::IS_FIXED && r.mean_se > best_se) {
            best_se = r.mean_se;
            best_rho = *r.point.rho;
        }
        if (r.scheme == Scheme::DIS) {
            mean_rho_star = *r.mean_rho_star;
        }
    }
    CHECK(std::abs(best_rho - mean_rho_star) <= 0.1 + 1e-12); // within grid resolution
}

TEST_CASE("sweep-level dis switches to the fallback in the power-limited regime")
{
    // find a drop where even full orthogonal steering is unaffordable
    SweepPoint point;
    point.gamma_bar_db = 10.0;
    point.xi = 0.05;
    bool found = false;
    for (std::uint64_t i = 0; i < 200 && !found; ++i) {
        RngStream rng = RngStream::for_drop(91, 0, i);
        const auto drop =
            channel::make_drop(channel::budget_normalized(10.0, 0.05), {}, 1, rng);
        const auto an = schemes::analyze(drop, 1);
        const double demand = drop.budget.p1e * an.mode0().g_norm2[0];
        if (demand <= drop.budget.p0e) {
            continue;
        }
        found = true;
        const auto r = evaluate_scheme(drop, an, Scheme::DIS, point, Fallback::ZF,
                                       BudgetSplit::Equal);
        CHECK_FALSE(r.feasible);
        CHECK(r.fallback_applied == Fallback::ZF);
        CHECK(r.se_bits == schemes::zf_rx(drop, an).se_bits);
        CHECK(r.rho.has_value()); // the attempted factor is kept for statistics
        CHECK(r.power_overhead_e <= drop.budget.p0e);

        // the library-level operation keeps its always-feasible contract
        const auto lib = steering::dis(drop, an);
        CHECK(lib.feasible);
        CHECK(lib.power_overhead_e <= drop.budget.p0e);
    }
    CHECK(found);
}

TEST_CASE("mean rho* grows with xi")
{
    SweepSpec spec;
    spec.gamma_bar_db = {5.0};
    spec.xi = {0.1, 1.0, 10.0, 100.0};
    spec.schemes = {Scheme::DIS};
    spec.drops_per_point = 4000;
    spec.master_seed = 12;
    const auto rows = run_sweep(spec, 2);
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        CHECK(*rows[i].mean_rho_star < *rows[i + 1].mean_rho_star);
    }
}

TEST_CASE("spec validation names the offending field")
{
    SweepSpec spec = tiny_spec();
    spec.drops_per_point = 0;
    CHECK_THROWS_WITH_AS((void)run_sweep(spec, 1), doctest::Contains("drops_per_point"),
                         config_error);

    spec = tiny_spec();
    spec.xi = {-1.0};
    CHECK_THROWS_WITH_AS((void)run_sweep(spec, 1), doctest::Contains("xi"), config_error);

    spec = tiny_spec();
    spec.schemes = {Scheme::IS_FIXED};
    CHECK_THROWS_WITH_AS((void)run_sweep(spec, 1), doctest::Contains("rho"), config_error);

    spec = tiny_spec();
    spec.n_r0 = {3}; // exceeds n_t0 = 2
    CHECK_THROWS_WITH_AS((void)run_sweep(spec, 1), doctest::Contains("n_t0"), config_error);

    spec = tiny_spec();
    spec.m_streams = {2};
    spec.n_interferences = {2};
    CHECK_THROWS_WITH_AS((void)run_sweep(spec, 1), doctest::Contains("m_streams"),
                         config_error);

    spec = tiny_spec();
    spec.m_streams = {2};
    spec.schemes = {Scheme::ZF};
    CHECK_THROWS_WITH_AS((void)run_sweep(spec, 1), doctest::Contains("schemes"), config_error);
}

TEST_CASE("key=value configs parse with comments, brackets and aliases")
{
    const std::string text = R"(# experiment description
gamma_bar_db = [0, 5, 10]
xi = 0.1, 1
rho = 0.5
schemes = mf, zf, is_fixed, dis
drops = 50
seed = 77
fallback = mf
budget_split = proportional
out = results.csv
)";
    const SweepSpec spec = parse_config_text(text);
    CHECK(spec.gamma_bar_db == std::vector<double>{0.0, 5.0, 10.0});
    CHECK(spec.xi == std::vector<double>{0.1, 1.0});
    CHECK(spec.rho == std::vector<double>{0.5});
    CHECK(spec.schemes.size() == 4);
    CHECK(spec.drops_per_point == 50);
    CHECK(spec.master_seed == 77);
    CHECK(spec.fallback == Fallback::MF);
    CHECK(spec.budget_split == BudgetSplit::Proportional);
    CHECK(spec.output_path == "results.csv");
    spec.validate();
}

TEST_CASE("json configs parse to the same spec")
{
    const std::string text = R"({
        "gamma_bar_db": [0, 5, 10],
        "xi": [0.1, 1],
        "schemes": ["mf", "dis"],
        "drops_per_point": 50,
        "master_seed": 77,
        "fallback": "zf"
    })";
    const SweepSpec spec = parse_config_text(text);
    CHECK(spec.gamma_bar_db == std::vector<double>{0.0, 5.0, 10.0});
    CHECK(spec.schemes.size() == 2);
    CHECK(spec.drops_per_point == 50);
}

TEST_CASE("config errors carry the offending key")
{
    CHECK_THROWS_WITH_AS((void)parse_config_text("bogus_key = 1\n"),
                         doctest::Contains("bogus_key"), config_error);
    CHECK_THROWS_WITH_AS((void)parse_config_text("xi = fast\n"), doctest::Contains("xi"),
                         config_error);
    CHECK_THROWS_WITH_AS((void)parse_config_text("schemes = warp\n"),
                         doctest::Contains("schemes"), config_error);
    CHECK_THROWS_AS((void)parse_config_text("{\"xi\": [1], "), config_error);
}

TEST_CASE("prob_overhead restricts schemes and matches its own curve at p_bar = 1")
{
    SweepSpec spec;
    spec.gamma_bar_db = {10.0};
    spec.xi = {1.0};
    spec.schemes = {Scheme::IN, Scheme::OIS, Scheme::DIS};
    spec.drops_per_point = 2000;
    spec.master_seed = 5;
    const auto result = prob_overhead(spec, 2);
    REQUIRE(result.rows.size() == 3);
    for (const auto& row : result.rows) {
        double curve_at_one = -1.0;
        for (const auto& c : result.curve) {
            if (c.scheme == row.scheme && c.p_bar == 1.0) {
                curve_at_one = c.prob;
            }
        }
        CHECK(curve_at_one == row.prob_overhead_exceeds);
    }

    SweepSpec bad = spec;
    bad.schemes = {Scheme::MF};
    CHECK_THROWS_WITH_AS((void)prob_overhead(bad, 1), doctest::Contains("schemes"),
                         config_error);
}

TEST_CASE("overhead exceedance vanishes when the budget dwarfs the interference")
{
    SweepSpec spec;
    spec.gamma_bar_db = {10.0};
    spec.xi = {1e6};
    spec.schemes = {Scheme::IN, Scheme::OIS, Scheme::DIS};
    spec.drops_per_point = 2000;
    spec.master_seed = 13;
    const auto result = prob_overhead(spec, 2);
    for (const auto& row : result.rows) {
        CHECK(row.prob_overhead_exceeds <= 0.001);
    }
}

TEST_CASE("with two interferences OIS exceeds its budget less often at p_bar = 1")
{
    // the averaging across two orthogonal MBS streams thins the upper tail
    double prob_by_n[3] = {0.0, 0.0, 0.0};
    for (int n : {1, 2}) {
        SweepSpec spec;
        spec.gamma_bar_db = {10.0};
        spec.xi = {1.0};
        spec.n_interferences = {n};
        spec.schemes = {Scheme::OIS};
        spec.drops_per_point = 10000;
        spec.master_seed = 5;
        prob_by_n[n] = prob_overhead(spec, 2).rows[0].prob_overhead_exceeds;
    }
    CHECK(prob_by_n[2] < prob_by_n[1]);
}

TEST_CASE("cli: selftest, sweep, prob-overhead, single-drop, error paths")
{
    TempDir tmp;

    SUBCASE("selftest runs its suites")
    {
        const char* argv[] = {"steersim", "selftest", "--quick"};
        CHECK(cli_main(3, argv) == 0);
    }

    SUBCASE("sweep writes a parsable csv and is thread-count invariant")
    {
        const std::string cfg = tmp.file("sweep.cfg");
        {
            std::ofstream f(cfg);
            f << "gamma_bar_db = [0, 10]\nxi = 1\nschemes = mf, dis\ndrops = 200\nseed = 3\n";
        }
        const std::string out1 = tmp.file("a.csv");
        const std::string out4 = tmp.file("b.csv");
        const char* argv1[] = {"steersim", "sweep", "--config", cfg.c_str(),
                               "--out",    out1.c_str(), "--threads", "1"};
        const char* argv4[] = {"steersim", "sweep", "--config", cfg.c_str(),
                               "--out",    out4.c_str(), "--threads", "4"};
        CHECK(cli_main(8, argv1) == 0);
        CHECK(cli_main(8, argv4) == 0);
        const std::string a = read_file(out1);
        CHECK(a == read_file(out4));
        CHECK(a.rfind("gamma_bar_db,", 0) == 0);
        CHECK(std::count(a.begin(), a.end(), '\n') == 1 + 2 * 2);
    }

    SUBCASE("prob-overhead emits the sweep csv plus the exceedance curve")
    {
        const std::string cfg = tmp.file("po.cfg");
        {
            std::ofstream f(cfg);
            f << "gamma_bar_db = 10\nxi = 1\nschemes = in, ois, dis\ndrops = 500\n";
        }
        const std::string out = tmp.file("po.csv");
        const char* argv[] = {"steersim", "prob-overhead", "--config", cfg.c_str(),
                              "--out",    out.c_str()};
        CHECK(cli_main(6, argv) == 0);
        CHECK(read_file(out).rfind("gamma_bar_db,", 0) == 0);
        const std::string curve = read_file(tmp.file("po.exceedance.csv"));
        CHECK(curve.find("p_bar") != std::string::npos);
        CHECK(std::count(curve.begin(), curve.end(), '\n') == 1 + 3 * 41);
    }

    SUBCASE("single-drop emits structured json")
    {
        const std::string out = tmp.file("drop.json");
        const char* argv[] = {"steersim",   "single-drop", "--gamma-bar", "5",
                              "--xi",       "100",         "--seed",      "9",
                              "--out",      out.c_str()};
        CHECK(cli_main(10, argv) == 0);
        const auto j = nlohmann::json::parse(read_file(out));
        CHECK(j["budget"]["p0e"].get<double>() ==
              doctest::Approx(316.227766017).epsilon(1e-9));
        CHECK(j["results"].contains("dis"));
        CHECK(j["results"].contains("zfbf"));
        CHECK(j["rho_solution"]["rho_star"].get<double>() > 0.0);
        const double se = j["results"]["dis"]["se_bits"].get<double>();
        CHECK(se > 0.0);
    }

    SUBCASE("usage and config errors map to exit codes 1 and 2")
    {
        const char* bad_flag[] = {"steersim", "sweep", "--frobnicate"};
        CHECK(cli_main(3, bad_flag) == 1);

        const char* no_sub[] = {"steersim"};
        CHECK(cli_main(1, no_sub) == 1);

        const std::string cfg = tmp.file("bad.cfg");
        {
            std::ofstream f(cfg);
            f << "xi = -4\nschemes = dis\n";
        }
        const std::string out = tmp.file("never.csv");
        const char* argv[] = {"steersim", "sweep", "--config", cfg.c_str(),
                              "--out",    out.c_str()};
        CHECK(cli_main(6, argv) == 2);

        const char* no_out[] = {"steersim", "sweep"};
        CHECK(cli_main(2, no_out) == 2);

        const std::string cfg_ok = tmp.file("ok.cfg");
        {
            std::ofstream f(cfg_ok);
            f << "xi = 1\nschemes = dis\ndrops = 5\n";
        }
        const char* bad_out[] = {"steersim", "sweep",
                                 "--config", cfg_ok.c_str(),
                                 "--out",    "/nonexistent_dir_zz/x.csv"};
        CHECK(cli_main(6, bad_out) == 2);
    }
}

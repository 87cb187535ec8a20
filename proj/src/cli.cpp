#include "steersim/experiment.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

namespace steersim::experiment {

namespace {

using channel::AntennaConfig;
using channel::Drop;
using channel::RngStream;
using nlohmann::json;

json result_to_json(const SchemeResult& r)
{
    json j;
    j["scheme"] = schemes::name(r.scheme);
    j["feasible"] = r.feasible;
    if (r.rho) {
        j["rho"] = *r.rho;
    }
    if (!r.rhos.empty()) {
        j["rhos"] = r.rhos;
    }
    j["power_overhead_e"] = r.power_overhead_e;
    j["residual_interference"] = r.residual_interference;
    j["desired_power"] = r.desired_power;
    j["se_bits"] = r.se_bits;
    if (r.fallback_applied) {
        j["fallback_applied"] = schemes::name(*r.fallback_applied);
    }
    return j;
}

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::string fallback;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

void add_common(CLI::App* sub, CommonArgs& args, bool with_out)
{
    sub->add_option("--config", args.config_path, "declarative spec file (key=value or JSON)");
    if (with_out) {
        sub->add_option("--out", args.out_path, "output CSV path (overrides config)");
    }
    sub->add_option("--seed", args.seed, "master seed (overrides config)")
        ->each([&args](const std::string&) { args.seed_set = true; });
    sub->add_option("--threads", args.threads,
                    "worker threads (default: STEERSIM_THREADS or hardware)");
    sub->add_option("--fallback", args.fallback, "infeasible-scheme fallback: mf or zf");
}

SweepSpec load_spec(const CommonArgs& args)
{
    SweepSpec spec;
    if (!args.config_path.empty()) {
        spec = parse_config_file(args.config_path);
    }
    if (args.seed_set) {
        spec.master_seed = args.seed;
    }
    if (!args.out_path.empty()) {
        spec.output_path = args.out_path;
    }
    if (!args.fallback.empty()) {
        const auto f = schemes::parse_fallback(args.fallback);
        if (!f) {
            throw config_error("fallback", "expected mf or zf, got '" + args.fallback + "'");
        }
        spec.fallback = *f;
    }
    return spec;
}

std::string default_curve_path(const std::string& out_path)
{
    const std::string suffix = ".csv";
    if (out_path.size() > suffix.size() &&
        out_path.compare(out_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return out_path.substr(0, out_path.size() - suffix.size()) + ".exceedance.csv";
    }
    return out_path + ".exceedance.csv";
}

int run_sweep_command(const CommonArgs& args)
{
    SweepSpec spec = load_spec(args);
    if (spec.output_path.empty()) {
        throw config_error("output", "no output path (--out or output= in config)");
    }
    const auto rows = run_sweep(spec, args.threads);
    write_csv(rows, spec.output_path);
    std::cout << "wrote " << rows.size() << " rows to " << spec.output_path << "\n";
    return 0;
}

int run_prob_overhead_command(const CommonArgs& args, const std::string& curve_path_arg)
{
    SweepSpec spec = load_spec(args);
    if (spec.output_path.empty()) {
        throw config_error("output", "no output path (--out or output= in config)");
    }
    const OverheadResult result = prob_overhead(spec, args.threads);
    write_csv(result.rows, spec.output_path);
    const std::string curve_path =
        curve_path_arg.empty() ? default_curve_path(spec.output_path) : curve_path_arg;
    write_exceedance_csv(result.curve, curve_path);
    std::cout << "wrote " << result.rows.size() << " rows to " << spec.output_path << " and "
              << result.curve.size() << " curve rows to " << curve_path << "\n";
    return 0;
}

struct SingleDropArgs {
    std::optional<double> gamma_bar_db;
    std::optional<double> xi;
    std::optional<double> rho;
    std::optional<int> n_t0;
    std::optional<int> n_t1;
    std::optional<int> n_r0;
    std::optional<int> m_streams;
    std::optional<int> n_interferences;
    long drop_index = 0;
};

int run_single_drop_command(const CommonArgs& args, const SingleDropArgs& sd)
{
    SweepSpec spec = load_spec(args);
    // config axes must be single-valued; CLI flags override the config
    const auto single = [](const char* field, const auto& axis) {
        if (axis.size() > 1) {
            throw config_error(field, "single-drop requires single-valued axes");
        }
    };
    single("gamma_bar_db", spec.gamma_bar_db);
    single("xi", spec.xi);
    single("rho", spec.rho);
    single("n_t0", spec.n_t0);
    single("n_t1", spec.n_t1);
    single("n_r0", spec.n_r0);
    single("m_streams", spec.m_streams);
    single("n_interferences", spec.n_interferences);

    SweepPoint point;
    point.gamma_bar_db = sd.gamma_bar_db.value_or(spec.gamma_bar_db.front());
    point.xi = sd.xi.value_or(spec.xi.front());
    if (sd.rho) {
        point.rho = *sd.rho;
    } else if (!spec.rho.empty()) {
        point.rho = spec.rho.front();
    }
    point.n_t0 = sd.n_t0.value_or(spec.n_t0.front());
    point.n_t1 = sd.n_t1.value_or(spec.n_t1.front());
    point.n_r0 = sd.n_r0.value_or(spec.n_r0.front());
    point.m_streams = sd.m_streams.value_or(spec.m_streams.front());
    point.n_interferences = sd.n_interferences.value_or(spec.n_interferences.front());
    const long drop_index = sd.drop_index;

    std::vector<Scheme> schemes_to_run = spec.schemes;
    if (args.config_path.empty()) {
        schemes_to_run = {Scheme::MF, Scheme::ZF,  Scheme::ZFBF, Scheme::IN,
                          Scheme::OIS, Scheme::DIS};
        if (point.rho) {
            schemes_to_run.push_back(Scheme::IS_FIXED);
        }
    }
    if (point.m_streams > 1) {
        std::erase_if(schemes_to_run, [](Scheme s) {
            return s == Scheme::ZF || s == Scheme::ZFBF;
        });
    }

    const channel::LinkBudget budget = channel::budget_normalized(point.gamma_bar_db, point.xi);
    const AntennaConfig ant{point.n_t0, point.n_t1, point.n_r0, 0};
    RngStream rng = RngStream::for_drop(spec.master_seed, 0,
                                        static_cast<std::uint64_t>(drop_index));
    const Drop drop = channel::make_drop(budget, ant, point.n_interferences, rng);
    const auto an = schemes::analyze(drop, point.m_streams);

    json j;
    j["master_seed"] = spec.master_seed;
    j["drop_index"] = drop_index;
    j["stream_key"] = drop.seed;
    j["point"] = {{"gamma_bar_db", point.gamma_bar_db},
                  {"xi", point.xi},
                  {"n_t0", point.n_t0},
                  {"n_t1", point.n_t1},
                  {"n_r0", point.n_r0},
                  {"m_streams", point.m_streams},
                  {"n_interferences", point.n_interferences}};
    if (point.rho) {
        j["point"]["rho"] = *point.rho;
    }
    j["budget"] = {{"p0e", budget.p0e},
                   {"p1e", budget.p1e},
                   {"sigma2", budget.sigma2},
                   {"gamma_bar_db", budget.gamma_bar_db()},
                   {"xi", budget.xi()}};
    if (point.m_streams == 1 && point.n_interferences == 1) {
        const auto sol = steering::optimal_rho(an);
        j["rho_solution"] = {{"rho_star", sol.rho_star},
                             {"rho_max", sol.rho_max},
                             {"sinr_at_star", sol.sinr_at_star},
                             {"clamped", sol.clamped},
                             {"degenerate", sol.degenerate}};
    }
    json results = json::object();
    for (Scheme s : schemes_to_run) {
        results[schemes::name(s)] =
            result_to_json(evaluate_scheme(drop, an, s, point, spec.fallback,
                                           spec.budget_split));
    }
    j["results"] = results;

    const std::string text = j.dump(2) + "\n";
    if (args.out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream file(args.out_path, std::ios::binary);
        if (!file) {
            throw io_error("cannot open '" + args.out_path + "' for writing");
        }
        file << text;
    }
    return 0;
}

} // namespace

bool selftest(bool quick, std::ostream& out)
{
    bool all_ok = true;
    const auto report = [&](const char* suite, bool ok) {
        out << "selftest " << suite << ": " << (ok ? "ok" : "FAIL") << "\n";
        all_ok = all_ok && ok;
    };

    // SVD / pinv / projector invariants on seeded Gaussian matrices
    {
        bool ok = true;
        RngStream rng(0xabcdef12u);
        const int reps = quick ? 8 : 40;
        for (int rows = 2; rows <= 4 && ok; ++rows) {
            for (int cols = 2; cols <= 4 && ok; ++cols) {
                for (int rep = 0; rep < reps && ok; ++rep) {
                    const CMat a = channel::rayleigh(rows, cols, rng);
                    const auto s = numkit::svd(a);
                    const CMat utu = s.u.adjoint() * s.u;
                    const CMat vtv = s.v.adjoint() * s.v;
                    const CMat eye = CMat::Identity(utu.rows(), utu.cols());
                    ok = ok && (utu - eye).norm() <= 1e-10 && (vtv - eye).norm() <= 1e-10;
                    ok = ok && (s.reconstruct() - a).norm() <= 1e-10 * a.norm();
                    const CMat ap = numkit::pinv(a);
                    ok = ok && (a * ap * a - a).norm() <= 1e-9 * a.norm();
                    ok = ok && (ap * a * ap - ap).norm() <= 1e-9 * ap.norm();
                }
            }
        }
        report("linear-algebra kernel", ok);
    }

    // interference decomposition is orthogonal (Pythagoras)
    {
        bool ok = true;
        const int reps = quick ? 50 : 200;
        for (int i = 0; i < reps && ok; ++i) {
            RngStream rng = RngStream::for_drop(7, 0, static_cast<std::uint64_t>(i));
            const Drop drop = channel::make_drop(channel::budget_normalized(5.0, 1.0), {}, 1,
                                                 rng);
            const auto geo = schemes::geometry(drop);
            const double lhs = geo.i_in.squaredNorm() + geo.i_quad.squaredNorm();
            const double rhs = geo.i_vec.squaredNorm();
            ok = ok && std::abs(lhs - rhs) <= 1e-9 * std::max(rhs, 1.0);
            ok = ok && std::abs(numkit::inner(geo.i_in, geo.i_quad)) <=
                           1e-10 * std::max(rhs, 1.0);
        }
        report("steering geometry", ok);
    }

    // fixed-rho result matches explicit received-vector assembly
    {
        bool ok = true;
        const int reps = quick ? 30 : 100;
        for (int i = 0; i < reps && ok; ++i) {
            RngStream rng = RngStream::for_drop(11, 0, static_cast<std::uint64_t>(i));
            const Drop drop = channel::make_drop(channel::budget_normalized(5.0, 1.0), {}, 1,
                                                 rng);
            const auto an = schemes::analyze(drop, 1);
            for (double rho : {0.25, 0.75}) {
                const auto res = schemes::is_fixed(drop, an, rho);
                if (!res.feasible) {
                    continue;
                }
                const auto svd0 = numkit::svd(drop.h0);
                const CVec f0 = svd0.u.col(0);
                const CVec d_s = (drop.h0 * svd0.v.col(0)).normalized();
                const CMat proj = numkit::projector(d_s);
                const CVec steered = std::sqrt(drop.budget.p1e) * (1.0 - rho) *
                                     (proj * (drop.h10 * drop.mbs_precoders[0]));
                const double residual = std::norm(numkit::inner(f0, steered));
                ok = ok && std::abs(residual - res.residual_interference) <=
                               1e-9 * std::max(residual, 1e-12);
            }
        }
        report("steered-vector reconstruction", ok);
    }

    // closed-form rho* against a dense grid
    {
        bool ok = true;
        const int reps = quick ? 60 : 300;
        for (int i = 0; i < reps && ok; ++i) {
            RngStream rng = RngStream::for_drop(13, 0, static_cast<std::uint64_t>(i));
            const Drop drop = channel::make_drop(channel::budget_normalized(5.0, 1.0), {}, 1,
                                                 rng);
            const auto k = steering::coefficients_for(drop);
            const auto sol = steering::optimal_rho(drop);
            if (sol.degenerate) {
                continue;
            }
            double best_rho = 0.0;
            double best_phi = -1.0;
            for (double rho = 1e-4; rho <= sol.rho_max; rho += 1e-4) {
                const double phi = steering::sinr_dis(k, rho);
                if (phi > best_phi) {
                    best_phi = phi;
                    best_rho = rho;
                }
            }
            ok = ok && std::abs(best_rho - sol.rho_star) <= 1e-3;
        }
        report("closed-form optimum vs grid", ok);
    }

    // byte-identical sweep output across thread counts
    {
        SweepSpec spec;
        spec.gamma_bar_db = {0.0, 10.0};
        spec.xi = {1.0};
        spec.schemes = {Scheme::MF, Scheme::OIS, Scheme::DIS};
        spec.drops_per_point = quick ? 200 : 1000;
        spec.master_seed = 99;
        const std::string a = csv_string(run_sweep(spec, 1));
        const std::string b = csv_string(run_sweep(spec, 3));
        report("thread-count determinism", a == b);
    }

    return all_ok;
}

int cli_main(int argc, const char* const* argv)
{
    CLI::App app{"steersim: downlink interference-steering link-level simulator"};
    app.require_subcommand(1);

    CommonArgs sweep_args;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a Monte-Carlo sweep, emit CSV");
    add_common(sweep_cmd, sweep_args, true);

    CommonArgs po_args;
    std::string curve_out;
    CLI::App* po_cmd = app.add_subcommand(
        "prob-overhead", "power-overhead exceedance study (IN/OIS/DIS/IS_FIXED)");
    add_common(po_cmd, po_args, true);
    po_cmd->add_option("--curve-out", curve_out,
                       "normalized-overhead curve CSV (default: <out>.exceedance.csv)");

    CommonArgs sd_args;
    SingleDropArgs sd;
    CLI::App* sd_cmd =
        app.add_subcommand("single-drop", "dump one drop's per-scheme results as JSON");
    add_common(sd_cmd, sd_args, true);
    sd_cmd->add_option("--gamma-bar", sd.gamma_bar_db, "interference-to-noise ratio, dB");
    sd_cmd->add_option("--xi", sd.xi, "effective desired-to-interference power ratio");
    sd_cmd->add_option("--rho", sd.rho, "fixed steering factor for IS");
    sd_cmd->add_option("--n-t0", sd.n_t0, "PBS antennas");
    sd_cmd->add_option("--n-t1", sd.n_t1, "MBS antennas");
    sd_cmd->add_option("--n-r0", sd.n_r0, "PUE antennas");
    sd_cmd->add_option("--m-streams", sd.m_streams, "desired streams");
    sd_cmd->add_option("--n-interferences", sd.n_interferences, "MBS streams");
    sd_cmd->add_option("--drop-index", sd.drop_index, "drop index within the stream");

    bool quick = false;
    CLI::App* st_cmd = app.add_subcommand("selftest", "run built-in oracle suites");
    st_cmd->add_flag("--quick", quick, "reduced repetition counts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (sweep_cmd->parsed()) {
            return run_sweep_command(sweep_args);
        }
        if (po_cmd->parsed()) {
            return run_prob_overhead_command(po_args, curve_out);
        }
        if (sd_cmd->parsed()) {
            return run_single_drop_command(sd_args, sd);
        }
        if (st_cmd->parsed()) {
            return selftest(quick, std::cout) ? 0 : 3;
        }
    } catch (const config_error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical assertion failed: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}

} // namespace steersim::experiment

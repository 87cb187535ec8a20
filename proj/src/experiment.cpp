#include "steersim/experiment.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace steersim::experiment {

namespace {

using channel::AntennaConfig;
using channel::Drop;
using channel::RngStream;
using schemes::DropAnalysis;

constexpr double kPBarStep = 0.05;
constexpr int kPBarCount = 41; // p_bar grid 0.00 .. 2.00
constexpr int kChunkSize = 8192;

std::string lower(const std::string& s)
{
    std::string t;
    t.reserve(s.size());
    for (char c : s) {
        t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return t;
}

std::string fmt_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string csv_field(const std::string& raw)
{
    if (raw.find_first_of(",\"\n\r") == std::string::npos) {
        return raw;
    }
    std::string quoted = "\"";
    for (char c : raw) {
        if (c == '"') {
            quoted += "\"\"";
        } else {
            quoted.push_back(c);
        }
    }
    quoted += "\"";
    return quoted;
}

struct Kahan {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x)
    {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

int resolve_threads(int requested)
{
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("STEERSIM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) {
            return n;
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

struct DropRecord {
    double se = 0.0;
    double rho = 0.0;
    double overhead_norm = 0.0;
    bool has_rho = false;
    bool exceeds = false;
    bool infeasible = false;
};

struct SchemeAccumulator {
    Kahan se_sum;
    Kahan se_sq;
    Kahan rho_sum;
    long rho_count = 0;
    long exceed_count = 0;
    long infeasible_count = 0;
    long n = 0;
    std::vector<long> curve_counts = std::vector<long>(kPBarCount, 0);

    void add(const DropRecord& r, bool with_curve)
    {
        ++n;
        se_sum.add(r.se);
        se_sq.add(r.se * r.se);
        if (r.has_rho) {
            rho_sum.add(r.rho);
            ++rho_count;
        }
        if (r.exceeds) {
            ++exceed_count;
        }
        if (r.infeasible) {
            ++infeasible_count;
        }
        if (with_curve) {
            for (int k = 0; k < kPBarCount; ++k) {
                if (r.overhead_norm > k * kPBarStep) {
                    ++curve_counts[static_cast<std::size_t>(k)];
                }
            }
        }
    }
};

/// The figure protocol treats an IM scheme as unavailable when its power
/// demand exceeds the budget. DIS's chosen overhead never does (rho* is
/// budget-feasible by construction), so the trigger is the power-limited
/// regime itself: full orthogonal steering unaffordable (rho_max < 1).
SchemeResult dis_with_protocol_fallback(const Drop& drop, const DropAnalysis& an,
                                        SchemeResult r, double full_steer_demand,
                                        Fallback fallback)
{
    if (full_steer_demand > an.p0e) {
        const SchemeResult sub = schemes::fallback_result(drop, an, fallback);
        r.feasible = false;
        r.fallback_applied = fallback;
        r.se_bits = sub.se_bits;
        r.desired_power = sub.desired_power;
        r.residual_interference = sub.residual_interference;
    }
    return r;
}

std::vector<double> dis_budgets(const DropAnalysis& an, BudgetSplit split)
{
    const std::size_t n_int = an.i_raw.size();
    std::vector<double> budgets(n_int, an.p0e / static_cast<double>(n_int));
    if (split == BudgetSplit::Proportional) {
        double total_weight = 0.0;
        std::vector<double> w(n_int, 0.0);
        for (std::size_t n = 0; n < n_int; ++n) {
            w[n] = an.p1n[n] * an.mode0().g_norm2[n];
            total_weight += w[n];
        }
        if (total_weight > 0.0) {
            for (std::size_t n = 0; n < n_int; ++n) {
                budgets[n] = an.p0e * w[n] / total_weight;
            }
        }
    }
    return budgets;
}

} // namespace

std::string name(BudgetSplit split)
{
    return split == BudgetSplit::Equal ? "equal" : "proportional";
}

std::optional<BudgetSplit> parse_budget_split(const std::string& text)
{
    const std::string t = lower(text);
    if (t == "equal") return BudgetSplit::Equal;
    if (t == "proportional") return BudgetSplit::Proportional;
    return std::nullopt;
}

void SweepSpec::validate() const
{
    if (drops_per_point < 1) {
        throw config_error("drops_per_point", "must be >= 1");
    }
    if (schemes.empty()) {
        throw config_error("schemes", "at least one scheme required");
    }
    const auto nonempty = [](const char* field, std::size_t n) {
        if (n == 0) {
            throw config_error(field, "axis must not be empty");
        }
    };
    nonempty("gamma_bar_db", gamma_bar_db.size());
    nonempty("xi", xi.size());
    nonempty("n_t0", n_t0.size());
    nonempty("n_t1", n_t1.size());
    nonempty("n_r0", n_r0.size());
    nonempty("m_streams", m_streams.size());
    nonempty("n_interferences", n_interferences.size());

    for (double x : xi) {
        if (!(x > 0.0)) {
            throw config_error("xi", "values must be positive");
        }
    }
    for (double r : rho) {
        if (!(r > 0.0 && r <= 1.0)) {
            throw config_error("rho", "values must lie in (0, 1]");
        }
    }
    const bool has_is_fixed =
        std::find(schemes.begin(), schemes.end(), Scheme::IS_FIXED) != schemes.end();
    if (has_is_fixed && rho.empty()) {
        throw config_error("rho", "IS_FIXED requires a rho axis");
    }

    for (int v : n_r0) {
        if (v < 2) {
            throw config_error("n_r0", "PUE needs at least two antennas");
        }
    }
    for (int v : n_t1) {
        if (v < 2) {
            throw config_error("n_t1", "MBS needs at least two antennas");
        }
    }
    for (int t0 : n_t0) {
        for (int r0 : n_r0) {
            if (t0 < r0) {
                throw config_error("n_t0", "requires n_t0 >= n_r0 for every grid point");
            }
        }
    }
    for (int m : m_streams) {
        if (m < 1) {
            throw config_error("m_streams", "must be >= 1");
        }
        for (int t0 : n_t0) {
            for (int r0 : n_r0) {
                if (m > std::min(t0, r0)) {
                    throw config_error("m_streams", "exceeds min(n_t0, n_r0) at a grid point");
                }
            }
        }
    }
    for (int n : n_interferences) {
        if (n < 1) {
            throw config_error("n_interferences", "must be >= 1");
        }
        for (int t1 : n_t1) {
            if (n > t1) {
                throw config_error("n_interferences", "exceeds n_t1 at a grid point");
            }
        }
    }
    const int max_m = *std::max_element(m_streams.begin(), m_streams.end());
    const int max_n = *std::max_element(n_interferences.begin(), n_interferences.end());
    if (max_m > 1 && max_n > 1) {
        throw config_error("m_streams",
                           "m_streams > 1 and n_interferences > 1 cannot be combined");
    }
    if (max_m > 1) {
        for (Scheme s : schemes) {
            if (s == Scheme::ZF || s == Scheme::ZFBF) {
                throw config_error("schemes", "zf/zfbf are not defined for m_streams > 1");
            }
        }
    }
}

std::size_t SweepSpec::point_count() const
{
    const std::size_t rho_n = rho.empty() ? 1 : rho.size();
    return gamma_bar_db.size() * xi.size() * rho_n * n_t0.size() * n_t1.size() * n_r0.size() *
           m_streams.size() * n_interferences.size();
}

std::vector<SweepPoint> enumerate_points(const SweepSpec& spec)
{
    std::vector<SweepPoint> points;
    points.reserve(spec.point_count());
    std::vector<std::optional<double>> rho_axis;
    if (spec.rho.empty()) {
        rho_axis.push_back(std::nullopt);
    } else {
        for (double r : spec.rho) {
            rho_axis.emplace_back(r);
        }
    }
    for (double gamma : spec.gamma_bar_db) {
        for (double x : spec.xi) {
            for (const auto& r : rho_axis) {
                for (int t0 : spec.n_t0) {
                    for (int t1 : spec.n_t1) {
                        for (int r0 : spec.n_r0) {
                            for (int m : spec.m_streams) {
                                for (int n : spec.n_interferences) {
                                    points.push_back({gamma, x, r, t0, t1, r0, m, n});
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return points;
}

SchemeResult evaluate_scheme(const Drop& drop, const DropAnalysis& an, Scheme scheme,
                             const SweepPoint& point, Fallback fallback,
                             BudgetSplit budget_split)
{
    if (point.m_streams == 1) {
        switch (scheme) {
        case Scheme::MF: return schemes::mf(drop, an);
        case Scheme::ZF: return schemes::zf_rx(drop, an);
        case Scheme::ZFBF: return schemes::zfbf(drop, an, fallback);
        case Scheme::IN: return schemes::in_scheme(drop, an, fallback);
        case Scheme::OIS: return schemes::ois(drop, an, fallback);
        case Scheme::IS_FIXED:
            if (!point.rho) {
                throw config_error("rho", "IS_FIXED requires a rho value");
            }
            return schemes::is_fixed(drop, an, *point.rho, fallback);
        case Scheme::DIS: {
            double full_steer_demand = 0.0;
            for (std::size_t n = 0; n < an.i_raw.size(); ++n) {
                full_steer_demand += an.p1n[n] * an.mode0().g_norm2[n];
            }
            SchemeResult r =
                point.n_interferences == 1
                    ? steering::dis(drop, an)
                    : steering::dis_multi_interference(drop, an,
                                                       dis_budgets(an, budget_split));
            return dis_with_protocol_fallback(drop, an, std::move(r), full_steer_demand,
                                              fallback);
        }
        }
        throw std::logic_error("evaluate_scheme: unknown scheme");
    }

    // multi-stream path, single interference (validated upstream)
    const std::vector<double> powers(static_cast<std::size_t>(point.m_streams),
                                     an.p0e / point.m_streams);
    switch (scheme) {
    case Scheme::MF:
        return schemes::multi_stream_fixed_rho(drop, an, powers, 0.0, Scheme::MF, fallback);
    case Scheme::OIS:
        return schemes::multi_stream_fixed_rho(drop, an, powers, 1.0, Scheme::OIS, fallback);
    case Scheme::IS_FIXED:
        if (!point.rho) {
            throw config_error("rho", "IS_FIXED requires a rho value");
        }
        return schemes::multi_stream_fixed_rho(drop, an, powers, *point.rho, Scheme::IS_FIXED,
                                               fallback);
    case Scheme::IN: return schemes::in_multi_stream(drop, an, powers, fallback);
    case Scheme::DIS: {
        SchemeResult r = steering::dis_multi_stream(drop, an, powers);
        bool power_limited = false;
        for (std::size_t m = 0; m < an.modes.size(); ++m) {
            if (an.p1n[0] * an.modes[m].g_norm2[0] > powers[m]) {
                power_limited = true;
                break;
            }
        }
        if (power_limited) {
            const SchemeResult sub = schemes::multi_stream_fixed_rho(drop, an, powers, 0.0,
                                                                     Scheme::MF, fallback);
            r.feasible = false;
            r.fallback_applied = Fallback::MF;
            r.se_bits = sub.se_bits;
            r.desired_power = sub.desired_power;
            r.residual_interference = sub.residual_interference;
        }
        return r;
    }
    case Scheme::ZF:
    case Scheme::ZFBF: break;
    }
    throw config_error("schemes", "zf/zfbf are not defined for m_streams > 1");
}

namespace {

std::vector<SweepRow> run_campaign(const SweepSpec& spec, int threads, bool with_curve,
                                   std::vector<ExceedanceRow>* curve_out)
{
    spec.validate();
    const std::vector<SweepPoint> points = enumerate_points(spec);
    const int n_threads = resolve_threads(threads);
    const std::size_t n_schemes = spec.schemes.size();

    std::vector<SweepRow> rows;
    rows.reserve(points.size() * n_schemes);

    std::vector<DropRecord> buffer;
    for (std::size_t point_index = 0; point_index < points.size(); ++point_index) {
        const SweepPoint& point = points[point_index];
        const channel::LinkBudget budget = channel::budget_normalized(point.gamma_bar_db,
                                                                      point.xi);
        const AntennaConfig ant{point.n_t0, point.n_t1, point.n_r0, 0};

        std::vector<SchemeAccumulator> acc(n_schemes);
        const long n_drops = spec.drops_per_point;
        for (long chunk_start = 0; chunk_start < n_drops; chunk_start += kChunkSize) {
            const long chunk_len = std::min<long>(kChunkSize, n_drops - chunk_start);
            buffer.assign(static_cast<std::size_t>(chunk_len) * n_schemes, DropRecord{});

            std::atomic<long> next{0};
            std::exception_ptr first_error;
            std::mutex error_mutex;
            auto worker = [&]() {
                try {
                    for (;;) {
                        const long local = next.fetch_add(1);
                        if (local >= chunk_len) {
                            return;
                        }
                        const long drop_index = chunk_start + local;
                        RngStream rng = RngStream::for_drop(
                            spec.master_seed, point_index,
                            static_cast<std::uint64_t>(drop_index));
                        const Drop drop = channel::make_drop(budget, ant,
                                                             point.n_interferences, rng);
                        const DropAnalysis an = schemes::analyze(drop, point.m_streams);
                        for (std::size_t si = 0; si < n_schemes; ++si) {
                            const SchemeResult res = evaluate_scheme(
                                drop, an, spec.schemes[si], point, spec.fallback,
                                spec.budget_split);
                            DropRecord& rec =
                                buffer[static_cast<std::size_t>(local) * n_schemes + si];
                            rec.se = res.se_bits;
                            rec.has_rho = res.rho.has_value();
                            rec.rho = res.rho.value_or(0.0);
                            rec.exceeds = res.power_overhead_e > budget.p0e;
                            rec.infeasible = !res.feasible;
                            rec.overhead_norm = res.power_overhead_e / budget.p0e;
                        }
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                    next.store(chunk_len);
                }
            };

            if (n_threads <= 1) {
                worker();
            } else {
                std::vector<std::thread> pool;
                pool.reserve(static_cast<std::size_t>(n_threads) - 1);
                for (int t = 1; t < n_threads; ++t) {
                    pool.emplace_back(worker);
                }
                worker();
                for (auto& th : pool) {
                    th.join();
                }
            }
            if (first_error) {
                std::rethrow_exception(first_error);
            }

            // ordered reduction: independent of thread count
            for (long local = 0; local < chunk_len; ++local) {
                for (std::size_t si = 0; si < n_schemes; ++si) {
                    acc[si].add(buffer[static_cast<std::size_t>(local) * n_schemes + si],
                                with_curve);
                }
            }
        }

        for (std::size_t si = 0; si < n_schemes; ++si) {
            const SchemeAccumulator& a = acc[si];
            SweepRow row;
            row.point = point;
            row.scheme = spec.schemes[si];
            row.n_drops = a.n;
            row.mean_se = a.se_sum.sum / static_cast<double>(a.n);
            if (a.rho_count > 0) {
                row.mean_rho_star = a.rho_sum.sum / static_cast<double>(a.rho_count);
            }
            row.prob_overhead_exceeds =
                static_cast<double>(a.exceed_count) / static_cast<double>(a.n);
            row.prob_infeasible =
                static_cast<double>(a.infeasible_count) / static_cast<double>(a.n);
            if (a.n > 1) {
                const double mean = row.mean_se;
                const double var = std::max(
                    0.0, (a.se_sq.sum - static_cast<double>(a.n) * mean * mean) /
                             static_cast<double>(a.n - 1));
                row.stderr_se = std::sqrt(var / static_cast<double>(a.n));
            }
            rows.push_back(std::move(row));

            if (with_curve && curve_out) {
                for (int k = 0; k < kPBarCount; ++k) {
                    ExceedanceRow er;
                    er.point = point;
                    er.scheme = spec.schemes[si];
                    er.p_bar = k * kPBarStep;
                    er.prob = static_cast<double>(a.curve_counts[static_cast<std::size_t>(k)]) /
                              static_cast<double>(a.n);
                    er.n_drops = a.n;
                    curve_out->push_back(er);
                }
            }
        }
    }
    return rows;
}

} // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec, int threads)
{
    return run_campaign(spec, threads, false, nullptr);
}

OverheadResult prob_overhead(const SweepSpec& spec, int threads)
{
    for (Scheme s : spec.schemes) {
        if (s != Scheme::IN && s != Scheme::OIS && s != Scheme::DIS && s != Scheme::IS_FIXED) {
            throw config_error("schemes",
                               "prob-overhead supports only in/ois/dis/is_fixed");
        }
    }
    OverheadResult out;
    out.rows = run_campaign(spec, threads, true, &out.curve);
    return out;
}

namespace {

void append_point_fields(std::string& line, const SweepPoint& p)
{
    line += fmt_double(p.gamma_bar_db);
    line += ',';
    line += fmt_double(p.xi);
    line += ',';
    if (p.rho) {
        line += fmt_double(*p.rho);
    }
    line += ',';
    line += std::to_string(p.n_t0);
    line += ',';
    line += std::to_string(p.n_t1);
    line += ',';
    line += std::to_string(p.n_r0);
    line += ',';
    line += std::to_string(p.m_streams);
    line += ',';
    line += std::to_string(p.n_interferences);
}

} // namespace

std::string csv_string(const std::vector<SweepRow>& rows)
{
    std::string out = "gamma_bar_db,xi,rho,n_t0,n_t1,n_r0,m_streams,n_interferences,scheme,"
                      "mean_se,mean_rho_star,prob_overhead_exceeds,prob_infeasible,n_drops,"
                      "stderr_se\n";
    for (const SweepRow& r : rows) {
        std::string line;
        append_point_fields(line, r.point);
        line += ',';
        line += csv_field(schemes::name(r.scheme));
        line += ',';
        line += fmt_double(r.mean_se);
        line += ',';
        if (r.mean_rho_star) {
            line += fmt_double(*r.mean_rho_star);
        }
        line += ',';
        line += fmt_double(r.prob_overhead_exceeds);
        line += ',';
        line += fmt_double(r.prob_infeasible);
        line += ',';
        line += std::to_string(r.n_drops);
        line += ',';
        line += fmt_double(r.stderr_se);
        line += '\n';
        out += line;
    }
    return out;
}

void write_csv(const std::vector<SweepRow>& rows, const std::string& path)
{
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw io_error("cannot open '" + path + "' for writing");
    }
    file << csv_string(rows);
    if (!file) {
        throw io_error("write failed for '" + path + "'");
    }
}

std::string exceedance_csv_string(const std::vector<ExceedanceRow>& rows)
{
    std::string out = "gamma_bar_db,xi,rho,n_t0,n_t1,n_r0,m_streams,n_interferences,scheme,"
                      "p_bar,prob_exceeds,n_drops\n";
    for (const ExceedanceRow& r : rows) {
        std::string line;
        append_point_fields(line, r.point);
        line += ',';
        line += csv_field(schemes::name(r.scheme));
        line += ',';
        line += fmt_double(r.p_bar);
        line += ',';
        line += fmt_double(r.prob);
        line += ',';
        line += std::to_string(r.n_drops);
        line += '\n';
        out += line;
    }
    return out;
}

void write_exceedance_csv(const std::vector<ExceedanceRow>& rows, const std::string& path)
{
    std::ofstream file(path, std::ios::binary);
    if (!file) {
        throw io_error("cannot open '" + path + "' for writing");
    }
    file << exceedance_csv_string(rows);
    if (!file) {
        throw io_error("write failed for '" + path + "'");
    }
}

namespace {

std::vector<std::string> split_list(std::string value)
{
    for (char& c : value) {
        if (c == '[' || c == ']' || c == ',') {
            c = ' ';
        }
    }
    std::vector<std::string> items;
    std::istringstream in(value);
    std::string item;
    while (in >> item) {
        items.push_back(item);
    }
    return items;
}

double parse_double(const std::string& field, const std::string& text)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw config_error(field, "cannot parse '" + text + "' as a number");
    }
}

long long parse_int(const std::string& field, const std::string& text)
{
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(text, &pos);
        if (pos != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw config_error(field, "cannot parse '" + text + "' as an integer");
    }
}

void apply_key(SweepSpec& spec, const std::string& key, const std::vector<std::string>& values,
               const std::string& raw)
{
    const auto doubles = [&](const char* field) {
        std::vector<double> out;
        for (const auto& v : values) {
            out.push_back(parse_double(field, v));
        }
        if (out.empty()) {
            throw config_error(field, "empty value");
        }
        return out;
    };
    const auto ints = [&](const char* field) {
        std::vector<int> out;
        for (const auto& v : values) {
            out.push_back(static_cast<int>(parse_int(field, v)));
        }
        if (out.empty()) {
            throw config_error(field, "empty value");
        }
        return out;
    };

    if (key == "gamma_bar_db" || key == "gamma_bar" || key == "gamma") {
        spec.gamma_bar_db = doubles("gamma_bar_db");
    } else if (key == "xi") {
        spec.xi = doubles("xi");
    } else if (key == "rho") {
        spec.rho = doubles("rho");
    } else if (key == "n_t0") {
        spec.n_t0 = ints("n_t0");
    } else if (key == "n_t1") {
        spec.n_t1 = ints("n_t1");
    } else if (key == "n_r0") {
        spec.n_r0 = ints("n_r0");
    } else if (key == "m_streams") {
        spec.m_streams = ints("m_streams");
    } else if (key == "n_interferences") {
        spec.n_interferences = ints("n_interferences");
    } else if (key == "schemes") {
        spec.schemes.clear();
        for (const auto& v : values) {
            const auto s = schemes::parse_scheme(v);
            if (!s) {
                throw config_error("schemes", "unknown scheme '" + v + "'");
            }
            spec.schemes.push_back(*s);
        }
        if (spec.schemes.empty()) {
            throw config_error("schemes", "empty value");
        }
    } else if (key == "drops_per_point" || key == "drops") {
        spec.drops_per_point = static_cast<int>(parse_int("drops_per_point", raw));
    } else if (key == "master_seed" || key == "seed") {
        spec.master_seed = static_cast<std::uint64_t>(parse_int("master_seed", raw));
    } else if (key == "fallback") {
        const auto f = schemes::parse_fallback(raw);
        if (!f) {
            throw config_error("fallback", "expected mf or zf, got '" + raw + "'");
        }
        spec.fallback = *f;
    } else if (key == "budget_split") {
        const auto b = parse_budget_split(raw);
        if (!b) {
            throw config_error("budget_split",
                               "expected equal or proportional, got '" + raw + "'");
        }
        spec.budget_split = *b;
    } else if (key == "output" || key == "out" || key == "output_path") {
        spec.output_path = raw;
    } else {
        throw config_error(key, "unknown configuration key");
    }
}

std::string trim(const std::string& s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

SweepSpec parse_kv_config(const std::string& text)
{
    SweepSpec spec;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error(line, "expected key = value");
        }
        const std::string key = lower(trim(line.substr(0, eq)));
        const std::string raw = trim(line.substr(eq + 1));
        apply_key(spec, key, split_list(raw), raw);
    }
    return spec;
}

SweepSpec parse_json_config(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("json", e.what());
    }
    if (!j.is_object()) {
        throw config_error("json", "top-level value must be an object");
    }
    SweepSpec spec;
    for (const auto& [key, value] : j.items()) {
        std::vector<std::string> values;
        std::string raw;
        const auto to_text = [](const nlohmann::json& v) -> std::string {
            if (v.is_string()) {
                return v.get<std::string>();
            }
            return v.dump();
        };
        if (value.is_array()) {
            for (const auto& v : value) {
                values.push_back(to_text(v));
            }
            raw = value.dump();
        } else {
            raw = to_text(value);
            values.push_back(raw);
        }
        apply_key(spec, lower(key), values, raw);
    }
    return spec;
}

} // namespace

SweepSpec parse_config_text(const std::string& text)
{
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            continue;
        }
        if (c == '{') {
            return parse_json_config(text);
        }
        break;
    }
    return parse_kv_config(text);
}

SweepSpec parse_config_file(const std::string& path)
{
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw io_error("cannot open config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << file.rdbuf();
    return parse_config_text(buf.str());
}

} // namespace steersim::experiment

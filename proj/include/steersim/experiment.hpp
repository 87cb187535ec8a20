#ifndef STEERSIM_EXPERIMENT_HPP
#define STEERSIM_EXPERIMENT_HPP

#include "steersim/steering.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace steersim::experiment {

using schemes::Fallback;
using schemes::Scheme;
using schemes::SchemeResult;

/// Invalid experiment description; names the offending field.
class config_error : public std::runtime_error {
public:
    config_error(std::string field, const std::string& message)
        : std::runtime_error("config error (" + field + "): " + message),
          field_(std::move(field))
    {
    }
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// File I/O failure with path context.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BudgetSplit { Equal, Proportional };

std::string name(BudgetSplit split);
std::optional<BudgetSplit> parse_budget_split(const std::string& text);

/// Declarative description of a Monte-Carlo campaign: the Cartesian product
/// of every axis is evaluated for every requested scheme.
struct SweepSpec {
    std::vector<double> gamma_bar_db{5.0};
    std::vector<double> xi{1.0};
    std::vector<double> rho; ///< optional axis; required when IS_FIXED is run
    std::vector<int> n_t0{2};
    std::vector<int> n_t1{2};
    std::vector<int> n_r0{2};
    std::vector<int> m_streams{1};
    std::vector<int> n_interferences{1};
    std::vector<Scheme> schemes{Scheme::DIS};
    int drops_per_point = 10000;
    std::uint64_t master_seed = 0;
    Fallback fallback = Fallback::ZF;
    BudgetSplit budget_split = BudgetSplit::Equal;
    std::string output_path;

    void validate() const; ///< throws config_error
    std::size_t point_count() const;
};

/// One grid point of a sweep.
struct SweepPoint {
    double gamma_bar_db = 5.0;
    double xi = 1.0;
    std::optional<double> rho;
    int n_t0 = 2;
    int n_t1 = 2;
    int n_r0 = 2;
    int m_streams = 1;
    int n_interferences = 1;
};

struct SweepRow {
    SweepPoint point;
    Scheme scheme = Scheme::DIS;
    double mean_se = 0.0;
    std::optional<double> mean_rho_star;
    double prob_overhead_exceeds = 0.0;
    double prob_infeasible = 0.0;
    long n_drops = 0;
    double stderr_se = 0.0;
};

/// One point of the normalized-overhead exceedance curve Prob(P/P0 > p_bar).
struct ExceedanceRow {
    SweepPoint point;
    Scheme scheme = Scheme::OIS;
    double p_bar = 0.0;
    double prob = 0.0;
    long n_drops = 0;
};

std::vector<SweepPoint> enumerate_points(const SweepSpec& spec);

/// Evaluate one scheme on one drop under the sweep's policy. The analysis
/// must have been built with the point's m_streams.
SchemeResult evaluate_scheme(const channel::Drop& drop, const schemes::DropAnalysis& an,
                             Scheme scheme, const SweepPoint& point, Fallback fallback,
                             BudgetSplit budget_split);

/// Run the campaign; rows are sorted by axis tuple then scheme order, and
/// the output is a pure function of (spec) regardless of thread count.
/// threads <= 0 means STEERSIM_THREADS or hardware concurrency.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, int threads = 0);

struct OverheadResult {
    std::vector<SweepRow> rows;
    std::vector<ExceedanceRow> curve; ///< p_bar grid over [0, 2], step 0.05
};

/// Power-overhead study (schemes restricted to IN/OIS/DIS/IS_FIXED).
OverheadResult prob_overhead(const SweepSpec& spec, int threads = 0);

std::string csv_string(const std::vector<SweepRow>& rows);
void write_csv(const std::vector<SweepRow>& rows, const std::string& path);
std::string exceedance_csv_string(const std::vector<ExceedanceRow>& rows);
void write_exceedance_csv(const std::vector<ExceedanceRow>& rows, const std::string& path);

/// key=value (# comments, lists in brackets or comma-separated) or JSON.
SweepSpec parse_config_text(const std::string& text);
SweepSpec parse_config_file(const std::string& path);

/// Built-in oracle suites behind the `selftest` subcommand.
bool selftest(bool quick, std::ostream& out);

/// Full command-line entry point. Exit codes: 0 ok, 1 usage, 2 config/IO,
/// 3 numerical assertion failure.
int cli_main(int argc, const char* const* argv);

} // namespace steersim::experiment

#endif

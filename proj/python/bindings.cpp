#include "steersim/experiment.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;

using namespace steersim;
using channel::AntennaConfig;
using channel::Deployment;
using channel::Drop;
using channel::LinkBudget;
using channel::RngStream;
using schemes::DropAnalysis;
using schemes::Fallback;
using schemes::Scheme;
using schemes::SchemeResult;
using steering::RhoCoefficients;
using steering::RhoSolution;

namespace {

Fallback fallback_from(const std::string& text)
{
    const auto f = schemes::parse_fallback(text);
    if (!f) {
        throw py::value_error("fallback must be 'mf' or 'zf'");
    }
    return *f;
}

std::vector<Scheme> schemes_from(const std::vector<std::string>& names)
{
    std::vector<Scheme> out;
    for (const auto& n : names) {
        const auto s = schemes::parse_scheme(n);
        if (!s) {
            throw py::value_error("unknown scheme '" + n + "'");
        }
        out.push_back(*s);
    }
    return out;
}

py::dict row_to_dict(const experiment::SweepRow& r)
{
    py::dict d;
    d["gamma_bar_db"] = r.point.gamma_bar_db;
    d["xi"] = r.point.xi;
    d["rho"] = r.point.rho ? py::object(py::float_(*r.point.rho)) : py::object(py::none());
    d["n_t0"] = r.point.n_t0;
    d["n_t1"] = r.point.n_t1;
    d["n_r0"] = r.point.n_r0;
    d["m_streams"] = r.point.m_streams;
    d["n_interferences"] = r.point.n_interferences;
    d["scheme"] = schemes::name(r.scheme);
    d["mean_se"] = r.mean_se;
    d["mean_rho_star"] =
        r.mean_rho_star ? py::object(py::float_(*r.mean_rho_star)) : py::object(py::none());
    d["prob_overhead_exceeds"] = r.prob_overhead_exceeds;
    d["prob_infeasible"] = r.prob_infeasible;
    d["n_drops"] = r.n_drops;
    d["stderr_se"] = r.stderr_se;
    return d;
}

} // namespace

PYBIND11_MODULE(_steersim, m)
{
    m.doc() = "Link-level Monte-Carlo simulator for dynamic interference steering";

    py::register_exception<numerical_error>(m, "NumericalError");
    py::register_exception<experiment::config_error>(m, "ConfigError");

    // ---- numkit ----
    py::class_<numkit::SvdResult>(m, "SvdResult")
        .def_readonly("u", &numkit::SvdResult::u)
        .def_readonly("sigma", &numkit::SvdResult::sigma)
        .def_readonly("v", &numkit::SvdResult::v)
        .def("reconstruct", &numkit::SvdResult::reconstruct);
    m.def("svd", &numkit::svd, py::arg("a"), "Thin complex SVD, singular values descending");
    m.def("pinv", &numkit::pinv, py::arg("a"), py::arg("rel_tol") = 1e-12,
          "Moore-Penrose pseudo-inverse");
    m.def("projector", &numkit::projector, py::arg("d"),
          "Rank-1 Hermitian projector onto span{d}");

    // ---- channel ----
    py::class_<LinkBudget>(m, "LinkBudget")
        .def(py::init<>())
        .def_readwrite("p0e", &LinkBudget::p0e)
        .def_readwrite("p1e", &LinkBudget::p1e)
        .def_readwrite("sigma2", &LinkBudget::sigma2)
        .def("gamma_bar_db", &LinkBudget::gamma_bar_db)
        .def("xi", &LinkBudget::xi)
        .def("__repr__", [](const LinkBudget& b) {
            std::ostringstream os;
            os << "LinkBudget(p0e=" << b.p0e << ", p1e=" << b.p1e << ", sigma2=" << b.sigma2
               << ")";
            return os.str();
        });

    py::class_<Deployment>(m, "Deployment")
        .def(py::init<>())
        .def_readwrite("n_t0", &Deployment::n_t0)
        .def_readwrite("n_t1", &Deployment::n_t1)
        .def_readwrite("n_r0", &Deployment::n_r0)
        .def_readwrite("p0_dbm", &Deployment::p0_dbm)
        .def_readwrite("p1_dbm", &Deployment::p1_dbm)
        .def_readwrite("eta0_m", &Deployment::eta0_m)
        .def_readwrite("eta10_m", &Deployment::eta10_m)
        .def_readwrite("d_m", &Deployment::d_m)
        .def_readwrite("big_d_m", &Deployment::big_d_m);

    py::class_<RngStream>(m, "RngStream")
        .def(py::init<std::uint64_t>(), py::arg("key"))
        .def_static("for_drop", &RngStream::for_drop, py::arg("master_seed"),
                    py::arg("point_index"), py::arg("drop_index"))
        .def("uniform", &RngStream::uniform)
        .def("cgauss", &RngStream::cgauss)
        .def_property_readonly("key", &RngStream::key);

    py::class_<Drop>(m, "Drop")
        .def_readonly("h0", &Drop::h0)
        .def_readonly("h1", &Drop::h1)
        .def_readonly("h10", &Drop::h10)
        .def_readonly("budget", &Drop::budget)
        .def_readonly("mbs_precoders", &Drop::mbs_precoders)
        .def_readonly("mbs_stream_powers", &Drop::mbs_stream_powers)
        .def_readonly("seed", &Drop::seed)
        .def_property_readonly("n_interferences", &Drop::n_interferences);

    m.def("rayleigh", &channel::rayleigh, py::arg("rows"), py::arg("cols"), py::arg("rng"));
    m.def("path_loss_mbs_db", &channel::path_loss_mbs_db, py::arg("eta10_m"));
    m.def("path_loss_pbs_db", &channel::path_loss_pbs_db, py::arg("eta0_m"));
    m.def("budget_from_deployment", &channel::budget_from_deployment, py::arg("deployment"),
          py::arg("sigma2_dbm"));
    m.def("budget_normalized", &channel::budget_normalized, py::arg("gamma_bar_db"),
          py::arg("xi"));
    m.def(
        "make_drop",
        [](const LinkBudget& budget, int n_t0, int n_t1, int n_r0, int n_streams_mbs,
           RngStream& rng, int n_r1) {
            return channel::make_drop(budget, AntennaConfig{n_t0, n_t1, n_r0, n_r1},
                                      n_streams_mbs, rng);
        },
        py::arg("budget"), py::arg("n_t0") = 2, py::arg("n_t1") = 2, py::arg("n_r0") = 2,
        py::arg("n_streams_mbs") = 1, py::arg("rng"), py::arg("n_r1") = 0);

    // ---- schemes ----
    py::class_<SchemeResult>(m, "SchemeResult")
        .def_property_readonly("scheme",
                               [](const SchemeResult& r) { return schemes::name(r.scheme); })
        .def_readonly("feasible", &SchemeResult::feasible)
        .def_readonly("rho", &SchemeResult::rho)
        .def_readonly("rhos", &SchemeResult::rhos)
        .def_readonly("power_overhead_e", &SchemeResult::power_overhead_e)
        .def_readonly("residual_interference", &SchemeResult::residual_interference)
        .def_readonly("desired_power", &SchemeResult::desired_power)
        .def_readonly("se_bits", &SchemeResult::se_bits)
        .def_property_readonly("fallback_applied",
                               [](const SchemeResult& r) -> py::object {
                                   if (!r.fallback_applied) {
                                       return py::none();
                                   }
                                   return py::str(schemes::name(*r.fallback_applied));
                               })
        .def("__repr__", [](const SchemeResult& r) {
            std::ostringstream os;
            os << "SchemeResult(" << schemes::name(r.scheme) << ", se_bits=" << r.se_bits
               << ", feasible=" << (r.feasible ? "True" : "False") << ")";
            return os.str();
        });

    py::class_<schemes::SteeringGeometry>(m, "SteeringGeometry")
        .def_readonly("d_s", &schemes::SteeringGeometry::d_s)
        .def_readonly("i_vec", &schemes::SteeringGeometry::i_vec)
        .def_readonly("i_in", &schemes::SteeringGeometry::i_in)
        .def_readonly("i_quad", &schemes::SteeringGeometry::i_quad)
        .def_readonly("g", &schemes::SteeringGeometry::g)
        .def_readonly("chi", &schemes::SteeringGeometry::chi);

    m.def("geometry", &schemes::geometry, py::arg("drop"));
    m.def("mf", [](const Drop& d) { return schemes::mf(d); }, py::arg("drop"));
    m.def("zf_rx", [](const Drop& d) { return schemes::zf_rx(d); }, py::arg("drop"));
    m.def(
        "zfbf",
        [](const Drop& d, const std::string& fb) { return schemes::zfbf(d, fallback_from(fb)); },
        py::arg("drop"), py::arg("fallback") = "zf");
    m.def(
        "in_scheme",
        [](const Drop& d, const std::string& fb) {
            return schemes::in_scheme(d, fallback_from(fb));
        },
        py::arg("drop"), py::arg("fallback") = "zf");
    m.def(
        "ois",
        [](const Drop& d, const std::string& fb) { return schemes::ois(d, fallback_from(fb)); },
        py::arg("drop"), py::arg("fallback") = "zf");
    m.def(
        "is_fixed",
        [](const Drop& d, double rho, const std::string& fb) {
            return schemes::is_fixed(d, rho, fallback_from(fb));
        },
        py::arg("drop"), py::arg("rho"), py::arg("fallback") = "zf");

    // ---- steering ----
    py::class_<RhoCoefficients>(m, "RhoCoefficients")
        .def_readonly("a", &RhoCoefficients::a)
        .def_readonly("b", &RhoCoefficients::b)
        .def_readonly("c", &RhoCoefficients::c)
        .def_readonly("d", &RhoCoefficients::d)
        .def_readonly("e", &RhoCoefficients::e);

    py::class_<RhoSolution>(m, "RhoSolution")
        .def_readonly("rho_star", &RhoSolution::rho_star)
        .def_readonly("rho_max", &RhoSolution::rho_max)
        .def_readonly("sinr_at_star", &RhoSolution::sinr_at_star)
        .def_readonly("clamped", &RhoSolution::clamped)
        .def_readonly("degenerate", &RhoSolution::degenerate)
        .def("__repr__", [](const RhoSolution& s) {
            std::ostringstream os;
            os << "RhoSolution(rho_star=" << s.rho_star << ", rho_max=" << s.rho_max << ")";
            return os.str();
        });

    m.def("coefficients_for",
          [](const Drop& d) { return steering::coefficients_for(d); }, py::arg("drop"));
    m.def("sinr_dis", &steering::sinr_dis, py::arg("coefficients"), py::arg("rho"));
    m.def("rho_max", [](const Drop& d) { return steering::rho_max(d); }, py::arg("drop"));
    m.def("optimal_rho", [](const Drop& d) { return steering::optimal_rho(d); },
          py::arg("drop"));
    m.def("dis", [](const Drop& d) { return steering::dis(d); }, py::arg("drop"));
    m.def(
        "dis_multi_interference",
        [](const Drop& d, const std::vector<double>& budgets) {
            return steering::dis_multi_interference(d, budgets);
        },
        py::arg("drop"), py::arg("budgets"));
    m.def(
        "joint_rho_n2",
        [](const Drop& d) {
            const auto j = steering::joint_rho_n2(d);
            return py::make_tuple(j.rho1, j.rho2, j.se);
        },
        py::arg("drop"));
    m.def(
        "dis_multi_stream",
        [](const Drop& d, const std::vector<double>& powers) {
            return steering::dis_multi_stream(d, powers);
        },
        py::arg("drop"), py::arg("stream_powers"));

    // ---- experiment ----
    py::class_<experiment::SweepSpec>(m, "SweepSpec")
        .def(py::init([](std::vector<double> gamma_bar_db, std::vector<double> xi,
                         std::vector<double> rho, std::vector<int> n_t0, std::vector<int> n_t1,
                         std::vector<int> n_r0, std::vector<int> m_streams,
                         std::vector<int> n_interferences, std::vector<std::string> schemes_,
                         int drops_per_point, std::uint64_t master_seed,
                         const std::string& fallback, const std::string& budget_split,
                         std::string output_path) {
                 experiment::SweepSpec spec;
                 spec.gamma_bar_db = std::move(gamma_bar_db);
                 spec.xi = std::move(xi);
                 spec.rho = std::move(rho);
                 spec.n_t0 = std::move(n_t0);
                 spec.n_t1 = std::move(n_t1);
                 spec.n_r0 = std::move(n_r0);
                 spec.m_streams = std::move(m_streams);
                 spec.n_interferences = std::move(n_interferences);
                 spec.schemes = schemes_from(schemes_);
                 spec.drops_per_point = drops_per_point;
                 spec.master_seed = master_seed;
                 spec.fallback = fallback_from(fallback);
                 const auto split = experiment::parse_budget_split(budget_split);
                 if (!split) {
                     throw py::value_error("budget_split must be 'equal' or 'proportional'");
                 }
                 spec.budget_split = *split;
                 spec.output_path = std::move(output_path);
                 spec.validate();
                 return spec;
             }),
             py::arg("gamma_bar_db") = std::vector<double>{5.0},
             py::arg("xi") = std::vector<double>{1.0},
             py::arg("rho") = std::vector<double>{},
             py::arg("n_t0") = std::vector<int>{2}, py::arg("n_t1") = std::vector<int>{2},
             py::arg("n_r0") = std::vector<int>{2},
             py::arg("m_streams") = std::vector<int>{1},
             py::arg("n_interferences") = std::vector<int>{1},
             py::arg("schemes") = std::vector<std::string>{"dis"},
             py::arg("drops_per_point") = 10000, py::arg("master_seed") = 0,
             py::arg("fallback") = "zf", py::arg("budget_split") = "equal",
             py::arg("output_path") = "");

    m.def(
        "run_sweep",
        [](const experiment::SweepSpec& spec, int threads) {
            const auto rows = experiment::run_sweep(spec, threads);
            py::list out;
            for (const auto& r : rows) {
                out.append(row_to_dict(r));
            }
            return out;
        },
        py::arg("spec"), py::arg("threads") = 0);

    m.def(
        "prob_overhead",
        [](const experiment::SweepSpec& spec, int threads) {
            const auto result = experiment::prob_overhead(spec, threads);
            py::list rows;
            for (const auto& r : result.rows) {
                rows.append(row_to_dict(r));
            }
            py::list curve;
            for (const auto& c : result.curve) {
                py::dict d;
                d["gamma_bar_db"] = c.point.gamma_bar_db;
                d["xi"] = c.point.xi;
                d["n_interferences"] = c.point.n_interferences;
                d["scheme"] = schemes::name(c.scheme);
                d["p_bar"] = c.p_bar;
                d["prob_exceeds"] = c.prob;
                curve.append(d);
            }
            return py::make_tuple(rows, curve);
        },
        py::arg("spec"), py::arg("threads") = 0);

    m.def(
        "sweep_to_csv",
        [](const experiment::SweepSpec& spec, const std::string& path, int threads) {
            experiment::write_csv(experiment::run_sweep(spec, threads), path);
        },
        py::arg("spec"), py::arg("path"), py::arg("threads") = 0,
        "Run the sweep and write the CSV exactly as the CLI would");

    m.def("parse_config", &experiment::parse_config_text, py::arg("text"));
}

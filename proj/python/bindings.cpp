#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hjlab/commands.hpp"
#include "hjlab/config.hpp"
#include "hjlab/effective.hpp"
#include "hjlab/errors.hpp"
#include "hjlab/pde.hpp"

namespace py = pybind11;
using namespace hjlab;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

Interval to_interval(std::pair<double, double> p) { return {p.first, p.second}; }

Branch to_branch(int b) {
    if (b == 1) return Branch::Left;
    if (b == 2) return Branch::Right;
    throw PreconditionError("branch must be 1 or 2");
}

EnvParams params_from(const py::dict& d) {
    EnvParams p;
    for (auto item : d) {
        const auto key = py::cast<std::string>(item.first);
        const auto val = py::cast<double>(item.second);
        if (key == "a0") p.a0 = val;
        else if (key == "v0") p.v0 = val;
        else if (key == "corr_length") p.corr_length = val;
        else if (key == "kappa") p.kappa = val;
        else if (key == "gain") p.gain = val;
        else if (key == "a_floor") p.a_floor = val;
        else if (key == "peak_exponent") p.peak_exponent = val;
        else throw PreconditionError("unknown environment parameter '" + key + "'");
    }
    return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Viscous Hamilton-Jacobi homogenization in random media";

    static py::exception<Error> base(m, "HjlabError");
    static py::exception<PreconditionError> precondition(m, "PreconditionError", base.ptr());
    static py::exception<InvariantViolation> invariant(m, "InvariantViolation", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const PreconditionError& e) {
            precondition(e.what());
        } catch (const InvariantViolation& e) {
            invariant(e.what());
        } catch (const Error& e) {
            base(e.what());
        }
    });

    py::class_<EnvRealization>(m, "Environment")
        .def_property_readonly("kind", [](const EnvRealization& e) { return std::string(to_string(e.kind())); })
        .def_property_readonly("seed", &EnvRealization::seed)
        .def_property_readonly("dx", &EnvRealization::dx)
        .def_property_readonly("window", [](const EnvRealization& e) { return py::make_tuple(e.x_min(), e.x_max()); })
        .def_property_readonly("x", [](const EnvRealization& e) {
            std::vector<double> x(e.size());
            for (std::size_t j = 0; j < x.size(); ++j) x[j] = e.node_x(j);
            return to_array(x);
        })
        .def_property_readonly("a", [](const EnvRealization& e) { return to_array(e.a_vals()); })
        .def_property_readonly("v", [](const EnvRealization& e) { return to_array(e.v_vals()); })
        .def("sample", &EnvRealization::sample, py::arg("x"))
        .def("s_between", [](const EnvRealization& e, double x, double y) { return s_between(e, x, y); })
        .def("__len__", &EnvRealization::size);

    m.def(
        "generate_env",
        [](const std::string& kind, std::uint64_t seed, std::pair<double, double> window, double dx,
           const py::dict& params) { return generate_env(parse_env_kind(kind), seed, to_interval(window), dx,
                                                         params_from(params)); },
        py::arg("kind"), py::arg("seed"), py::arg("window"), py::arg("dx") = 0.01, py::arg("params") = py::dict());

    py::class_<Hamiltonian>(m, "Hamiltonian")
        .def_static("power", &Hamiltonian::power, py::arg("gamma"))
        .def_static("asym_power", &Hamiltonian::asym_power, py::arg("gamma_left"), py::arg("gamma_right"))
        .def_static("log_quasiconvex", &Hamiltonian::log_quasiconvex)
        .def_property_readonly("name", &Hamiltonian::name)
        .def("__call__", [](const Hamiltonian& G, double p) { return G(p); })
        .def("branch_inverse", [](const Hamiltonian& G, int b, double y) { return G.branch_inverse(to_branch(b), y); })
        .def("lipschitz_on",
             [](const Hamiltonian& G, std::pair<double, double> iv) { return G.lipschitz_on(to_interval(iv)); });

    py::class_<HillWitness>(m, "HillWitness")
        .def_readonly("L1", &HillWitness::L1)
        .def_readonly("L2", &HillWitness::L2)
        .def_readonly("scaled_length", &HillWitness::scaled_length)
        .def_readonly("v_min_on_interval", &HillWitness::v_min_on_interval);
    m.def(
        "find_hill", [](const EnvRealization& e, double h, double C) { return find_hill(e, h, C); }, py::arg("env"),
        py::arg("h"), py::arg("C"));

    py::class_<CorrectorProfile>(m, "CorrectorProfile")
        .def_readonly("lambda_", &CorrectorProfile::lambda)
        .def_readonly("burn_in", &CorrectorProfile::burn_in)
        .def_readonly("cert_bound", &CorrectorProfile::cert_bound)
        .def_readonly("merge_gap", &CorrectorProfile::merge_gap)
        .def_property_readonly("bracket",
                               [](const CorrectorProfile& p) { return py::make_tuple(p.bracket.lo, p.bracket.hi); })
        .def_property_readonly("x", [](const CorrectorProfile& p) { return to_array(p.x); })
        .def_property_readonly("f", [](const CorrectorProfile& p) { return to_array(p.f); })
        .def("antiderivative", [](const CorrectorProfile& p) { return to_array(p.antiderivative()); });
    m.def(
        "corrector_profile",
        [](const EnvRealization& e, const Hamiltonian& G, double beta, double lambda, int branch,
           std::pair<double, double> region, double tol, double dx) {
            return corrector_profile(e, G, beta, lambda, to_branch(branch), to_interval(region), tol, dx);
        },
        py::arg("env"), py::arg("G"), py::arg("beta"), py::arg("lam"), py::arg("branch") = 2,
        py::arg("region") = std::pair<double, double>{0.0, 10.0}, py::arg("tol") = 1e-6, py::arg("dx") = 0.01);

    py::class_<ThetaEstimate>(m, "ThetaEstimate")
        .def_readonly("lambda_", &ThetaEstimate::lambda)
        .def_readonly("mean", &ThetaEstimate::mean)
        .def_readonly("ci_halfwidth", &ThetaEstimate::ci_halfwidth)
        .def_readonly("window_length", &ThetaEstimate::window_length)
        .def_readonly("n_batches", &ThetaEstimate::n_batches)
        .def_readonly("cert_bound", &ThetaEstimate::cert_bound)
        .def_readonly("burn_in", &ThetaEstimate::burn_in);
    m.def(
        "estimate_theta",
        [](const EnvRealization& e, const Hamiltonian& G, double beta, double lambda, int branch, double X,
           int n_batches, double tol, double dx) {
            return estimate_theta(e, G, beta, lambda, to_branch(branch), X, n_batches, tol, dx);
        },
        py::arg("env"), py::arg("G"), py::arg("beta"), py::arg("lam"), py::arg("branch") = 2, py::arg("X") = 2000.0,
        py::arg("n_batches") = 20, py::arg("tol") = 1e-6, py::arg("dx") = 0.01);

    m.def(
        "invert_theta",
        [](const EnvRealization& e, const Hamiltonian& G, double beta, double theta, int branch, double tol,
           double X, int n_batches) {
            ThetaSettings s;
            s.X = X;
            s.n_batches = n_batches;
            const Inversion inv = invert_theta(e, G, beta, theta, to_branch(branch), tol, s);
            return py::dict(py::arg("lam") = inv.lambda, py::arg("lam_lo") = inv.lambda_lo,
                            py::arg("lam_hi") = inv.lambda_hi, py::arg("theta_at") = inv.at.mean,
                            py::arg("ci_halfwidth") = inv.at.ci_halfwidth);
        },
        py::arg("env"), py::arg("G"), py::arg("beta"), py::arg("theta"), py::arg("branch") = 2, py::arg("tol") = 0.01,
        py::arg("X") = 2000.0, py::arg("n_batches") = 20);

    m.def(
        "homogenize_sweep",
        [](const EnvRealization& e, const Hamiltonian& G, double beta, double theta, const std::vector<double>& eps,
           double reference, double dx, double M_scaled) {
            SweepSettings s;
            s.dx = dx;
            s.M_scaled = M_scaled;
            const SweepResult r = homogenize_sweep(e, G, beta, theta, eps, s, reference);
            return py::dict(py::arg("epsilons") = r.epsilons, py::arg("values") = r.values,
                            py::arg("domain_sensitivity") = r.domain_sensitivity, py::arg("excursions") = r.excursions);
        },
        py::arg("env"), py::arg("G"), py::arg("beta"), py::arg("theta"), py::arg("epsilons"), py::arg("reference") = 0.0,
        py::arg("dx") = 0.05, py::arg("M_scaled") = 8.0);

    m.def("command_names", &command_names);
    m.def(
        "run_command",
        [](const std::string& command, const std::string& config, const std::string& out, int workers) {
            CommandOptions opts;
            opts.out_dir = out;
            opts.workers = workers;
            std::ostringstream log;
            const RunConfig cfg = load_config(config);
            const int rc = run_command(command, cfg, opts, log);
            return py::make_tuple(rc, log.str());
        },
        py::arg("command"), py::arg("config"), py::arg("out") = "", py::arg("workers") = 1);
}

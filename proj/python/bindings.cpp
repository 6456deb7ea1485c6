#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "grnvelo/consensus.hpp"
#include "grnvelo/control.hpp"
#include "grnvelo/dynamics.hpp"
#include "grnvelo/equilibrium.hpp"
#include "grnvelo/errors.hpp"
#include "grnvelo/reachability.hpp"
#include "grnvelo/scenario.hpp"

namespace py = pybind11;
using namespace grnvelo;

namespace {

using Rows = std::vector<std::vector<double>>;

GrnModel make_model(const Rows& w_plus, const Rows& w_minus, double kappa, const Vector& alpha,
                    const Vector& beta, const Vector& gamma) {
    Matrix wm = w_minus.empty() ? Matrix(w_plus.size(), w_plus.size()) : Matrix::from_rows(w_minus);
    return GrnModel(GrnTopology(Matrix::from_rows(w_plus), std::move(wm), kappa),
                    RateParams(alpha, beta, gamma));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "GRN-driven RNA velocity dynamics, equilibria, consensus and minimum-time control";

    py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);
    py::register_exception<UnreachableError>(m, "UnreachableError", PyExc_RuntimeError);

    py::class_<GrnModel>(m, "GrnModel")
        .def(py::init(&make_model), py::arg("w_plus"), py::arg("w_minus") = Rows{},
             py::arg("kappa") = 1.0, py::arg("alpha"), py::arg("beta"), py::arg("gamma"))
        .def_property_readonly("n_genes", &GrnModel::n_genes);

    m.def("regulation", [](const GrnModel& model, const Vector& s) {
        return regulation(model.topology(), s);
    });
    m.def("rhs", [](const GrnModel& model, const Vector& u, const Vector& s) {
        const Derivative d = rhs_single_cell(model, CellState(u, s));
        return py::make_tuple(d.du, d.ds);
    });
    m.def(
        "integrate",
        [](const GrnModel& model, const Vector& u, const Vector& s, double T, double dt) {
            const Trajectory tr = integrate(model, CellState(u, s), T, dt);
            return py::make_tuple(tr.times, tr.states);
        },
        py::arg("model"), py::arg("u"), py::arg("s"), py::arg("T"), py::arg("dt") = 1e-3);

    m.def("solve_equilibrium", [](const GrnModel& model) {
        const EquilibriumReport r = solve_equilibrium(model);
        py::dict d;
        d["converged"] = r.converged;
        d["s_star"] = r.s_star;
        d["u_star"] = r.u_star;
        d["iterations"] = r.iterations;
        d["residual"] = r.residual;
        d["rho_lambda"] = r.rho_lambda;
        d["feasible"] = r.feasible;
        return d;
    });
    m.def("spectral_radius", [](const Rows& rows) { return spectral_radius(Matrix::from_rows(rows)); });
    m.def("lambda2", [](const Rows& adjacency) {
        return lambda2(laplacian(Matrix::from_rows(adjacency)));
    });
    m.def("alon_boppana", &alon_boppana);
    m.def("bang_bang_update", [](double psi, double s_q, double lower, double upper, double prev) {
        return bang_bang_update(psi, s_q, ControlBounds{lower, upper}, prev);
    });

    m.def(
        "solve_min_time",
        [](const GrnModel& model, std::size_t gene, const Vector& u, const Vector& s,
           const std::vector<std::pair<std::size_t, double>>& targets, double lower, double upper,
           std::size_t bins) {
            std::vector<ControlTarget> tg;
            for (const auto& [g, v] : targets) tg.push_back({g, 0, v});
            const auto problem =
                ControlProblem::single(model, gene, ControlBounds{lower, upper}, tg, CellState(u, s));
            FbsmConfig cfg;
            cfg.bins = bins;
            const ControlSolution sol = solve_min_time(problem, cfg);
            py::dict d;
            d["T_star"] = sol.T_star;
            d["z"] = sol.z;
            d["times"] = sol.times;
            d["terminal_miss"] = sol.terminal_miss;
            d["inner_converged"] = sol.inner_converged;
            return d;
        },
        py::arg("model"), py::arg("gene"), py::arg("u"), py::arg("s"), py::arg("targets"),
        py::arg("lower") = 0.0, py::arg("upper") = 1.0, py::arg("bins") = 2000);

    m.def("molecular_distance", [](const GrnModel& model, std::size_t q, const std::string& kind,
                                   std::size_t gene) -> py::object {
        const auto d = molecular_distance(molecular_graph(model.topology()), q,
                                          kind == "u" ? NodeKind::U : NodeKind::S, gene);
        return d ? py::object(py::int_(*d)) : py::object(py::none());
    });

    m.def("run_scenario", [](const std::string& config_path, const std::string& out_dir) {
        const RunResult r = run_scenario(parse_config(config_path), out_dir);
        return r.exit_code;
    });
}

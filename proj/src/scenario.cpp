#include "grnvelo/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "grnvelo/consensus.hpp"
#include "grnvelo/dynamics.hpp"
#include "grnvelo/equilibrium.hpp"
#include "grnvelo/errors.hpp"
#include "grnvelo/reachability.hpp"
#include "grnvelo/rng.hpp"

namespace grnvelo {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

json nums(const Vector& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    std::ofstream open(const std::string& name) {
        const fs::path p = dir_ / name;
        files_.push_back(p);
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        return out;
    }

    void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << "\n"; }

    const std::vector<fs::path>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<fs::path> files_;
};

MultiCellState initial_state(const ScenarioConfig& c, std::size_t n_cells) {
    std::vector<CellState> cells;
    for (std::size_t i = 0; i < n_cells; ++i) {
        const auto& s = c.initial->per_cell ? c.initial->states[i] : c.initial->states[0];
        cells.emplace_back(s.u, s.s);
    }
    return MultiCellState(std::move(cells));
}

std::vector<std::size_t> sample_rows(std::size_t count, std::size_t stride) {
    std::vector<std::size_t> rows;
    for (std::size_t k = 0; k < count; k += stride) rows.push_back(k);
    if (rows.back() != count - 1) rows.push_back(count - 1);
    return rows;
}

void write_trajectory(Outputs& out, const Trajectory& traj, std::size_t stride) {
    auto f = out.open("trajectory.csv");
    f << "t,cell,gene,u,s\n";
    for (std::size_t k : sample_rows(traj.size(), stride))
        for (std::size_t i = 0; i < traj.n_cells; ++i)
            for (std::size_t g = 0; g < traj.n_genes; ++g)
                f << fmt(traj.times[k]) << ',' << i << ',' << g << ',' << fmt(traj.u(k, i, g))
                  << ',' << fmt(traj.s(k, i, g)) << '\n';
}

void write_plot_s(Outputs& out, const Vector& times, const std::vector<Vector>& states,
                  std::size_t n_cells, std::size_t n_genes, std::size_t stride) {
    auto f = out.open("plotdata_s.csv");
    f << "t";
    for (std::size_t i = 0; i < n_cells; ++i)
        for (std::size_t g = 0; g < n_genes; ++g) f << ",s_c" << i << "_g" << g;
    f << '\n';
    for (std::size_t k : sample_rows(times.size(), stride)) {
        f << fmt(times[k]);
        for (std::size_t i = 0; i < n_cells; ++i)
            for (std::size_t g = 0; g < n_genes; ++g) f << ',' << fmt(states[k][s_index(n_genes, i, g)]);
        f << '\n';
    }
}

void write_plot_deviation(Outputs& out, const Trajectory& traj, std::size_t stride) {
    auto f = out.open("plotdata_deviation.csv");
    f << "t";
    for (std::size_t g = 0; g < traj.n_genes; ++g) f << ",deviation_sq_g" << g;
    f << '\n';
    Vector sg(traj.n_cells);
    for (std::size_t k : sample_rows(traj.size(), stride)) {
        f << fmt(traj.times[k]);
        for (std::size_t g = 0; g < traj.n_genes; ++g) {
            for (std::size_t i = 0; i < traj.n_cells; ++i) sg[i] = traj.s(k, i, g);
            const auto d = decompose(sg);
            f << ',' << fmt(dot(d.deviation, d.deviation));
        }
        f << '\n';
    }
}

json state_blocks(const Vector& x, std::size_t n_cells, std::size_t n_genes) {
    json cells = json::array();
    for (std::size_t i = 0; i < n_cells; ++i) {
        Vector u(n_genes), s(n_genes);
        for (std::size_t g = 0; g < n_genes; ++g) {
            u[g] = x[u_index(n_genes, i, g)];
            s[g] = x[s_index(n_genes, i, g)];
        }
        cells.push_back(json{{"u", nums(u)}, {"s", nums(s)}});
    }
    return cells;
}

json header(const ScenarioConfig& c, const MultiCellSystem& sys) {
    return json{{"kind", c.kind},
                {"model_hash", model_hash(sys)},
                {"n_genes", sys.n_genes()},
                {"n_cells", sys.n_cells()},
                {"seed", c.seed}};
}

json equilibrium_json(const EquilibriumReport& r) {
    return json{{"converged", r.converged},     {"iterations", r.iterations},
                {"residual", num(r.residual)},  {"rho_lambda", num(r.rho_lambda)},
                {"feasible", r.feasible},       {"damping", r.damping},
                {"s_star", nums(r.s_star)},     {"u_star", nums(r.u_star)}};
}

json stability_json(const StabilityReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back(
            json{{"label", c.label}, {"lhs", num(c.lhs)}, {"rhs", num(c.rhs)}, {"passed", c.passed}});
    json j{{"mode", to_string(r.mode)}, {"verdict", r.verdict ? "pass" : "fail"},
           {"reason", r.reason},        {"checks", checks}};
    if (r.mode == StabilityMode::Linear) {
        j["p_max_real_eigenvalue"] = num(r.p_max_real);
    } else {
        j["delta"] = num(r.delta);
        j["c1"] = num(r.c1);
        j["omega"] = nums(r.omega);
        j["alpha_norm"] = nums(r.alpha_norm);
        j["omega_guarded"] = r.omega_guarded;
    }
    return j;
}

InterventionSchedule build_schedule(const SimulateConfig& s) {
    std::vector<InterventionEvent> events;
    for (const auto& e : s.interventions) {
        InterventionEvent ev;
        ev.time = e.time;
        ev.cell = e.cell;
        ev.gene = e.gene;
        ev.parameter = e.parameter == "alpha"  ? RateKind::Alpha
                       : e.parameter == "beta" ? RateKind::Beta
                                               : RateKind::Gamma;
        ev.value = e.value;
        events.push_back(ev);
    }
    return InterventionSchedule(std::move(events));
}

int run_simulate(const ScenarioConfig& c, const MultiCellSystem& sys, Outputs& out) {
    const auto& s = *c.simulate;
    const Trajectory traj =
        integrate(sys, initial_state(c, sys.n_cells()), s.horizon, s.dt, build_schedule(s));
    write_trajectory(out, traj, s.output_stride);
    write_plot_s(out, traj.times, traj.states, traj.n_cells, traj.n_genes, s.output_stride);
    if (sys.n_cells() > 1) write_plot_deviation(out, traj, s.output_stride);

    double min_coord = traj.states[0][0];
    for (const auto& x : traj.states)
        for (double v : x) min_coord = std::min(min_coord, v);
    json events = json::array();
    for (const auto& e : s.interventions)
        events.push_back(json{{"time", e.time},
                              {"applied_at_step", std::llround(e.time / s.dt)},
                              {"cell", e.cell ? json(*e.cell) : json("all")},
                              {"gene", e.gene},
                              {"parameter", e.parameter},
                              {"value", e.value}});
    json rep = header(c, sys);
    rep["integrator"] = traj.integrator;
    rep["dt"] = traj.dt;
    rep["steps"] = traj.size() - 1;
    rep["final_time"] = traj.times.back();
    rep["interventions"] = events;
    rep["min_coordinate"] = num(min_coord);
    rep["final_state"] = state_blocks(traj.states.back(), sys.n_cells(), sys.n_genes());
    out.write_json("report.json", rep);
    return exit_code::ok;
}

EquilibriumReport equilibrium_for(const ScenarioConfig& c, const MultiCellSystem& sys) {
    EquilibriumOptions opt;
    opt.tolerance = c.equilibrium->tolerance;
    opt.max_iterations = c.equilibrium->max_iterations;
    if (c.model.cells) return solve_equilibrium(sys, opt);
    return solve_equilibrium(sys.cell_model(0), opt);
}

int run_equilibrium(const ScenarioConfig& c, const MultiCellSystem& sys, Outputs& out) {
    const EquilibriumReport eq = equilibrium_for(c, sys);
    json rep = header(c, sys);
    rep["equilibrium"] = equilibrium_json(eq);
    if (eq.converged) {
        const Vector x = eq.flat_state(sys.n_genes());
        Vector f(x.size());
        rhs_flat(sys, x, f);
        rep["equilibrium"]["rhs_norm"] = num(norm_inf(f));
    }
    out.write_json("report.json", rep);
    return eq.converged ? exit_code::ok : exit_code::no_convergence;
}

int run_stability(const ScenarioConfig& c, const MultiCellSystem& sys, Outputs& out) {
    const auto& st = *c.stability;
    const bool multi = c.model.cells.has_value();
    std::string mode = st.mode;
    if (mode == "auto") mode = sys.topology().has_repressors() ? "lyapunov" : "linear";
    StabilityReport sr;
    if (mode == "linear")
        sr = multi ? check_stability_linear(sys) : check_stability_linear(sys.cell_model(0));
    else
        sr = multi ? check_stability_lyapunov(sys) : check_stability_lyapunov(sys.cell_model(0));
    const EquilibriumReport eq = equilibrium_for(c, sys);

    json rep = header(c, sys);
    rep["stability"] = stability_json(sr);
    rep["equilibrium"] = equilibrium_json(eq);
    if (st.horizon > 0.0 && eq.converged) {
        const Trajectory traj = integrate(sys, initial_state(c, sys.n_cells()), st.horizon, st.dt);
        const Vector xs = eq.flat_state(sys.n_genes());
        auto f = out.open("plotdata_lyapunov.csv");
        f << "t,V,dVdt\n";
        double max_increase = 0.0;
        double prev = lyapunov_value(traj.states[0], xs);
        for (std::size_t k = 0; k < traj.size(); ++k) {
            const double v = lyapunov_value(traj.states[k], xs);
            max_increase = std::max(max_increase, v - prev);
            prev = v;
        }
        for (std::size_t k : sample_rows(traj.size(), st.output_stride))
            f << fmt(traj.times[k]) << ',' << fmt(lyapunov_value(traj.states[k], xs)) << ','
              << fmt(lyapunov_derivative(sys, traj.states[k], xs)) << '\n';
        rep["lyapunov_trace"] = json{{"horizon", st.horizon},
                                     {"dt", st.dt},
                                     {"initial_value", num(lyapunov_value(traj.states[0], xs))},
                                     {"final_value", num(lyapunov_value(traj.states.back(), xs))},
                                     {"max_step_increase", num(max_increase)}};
    }
    out.write_json("report.json", rep);
    return eq.converged ? exit_code::ok : exit_code::no_convergence;
}

int run_consensus(const ScenarioConfig& c, const MultiCellSystem& sys, Outputs& out) {
    const auto& cc = *c.consensus;
    const Trajectory traj = integrate(sys, initial_state(c, sys.n_cells()), cc.horizon, cc.dt);
    const ConsensusReport cr = consensus_bound_check(sys, traj);
    write_trajectory(out, traj, cc.output_stride);
    write_plot_s(out, traj.times, traj.states, traj.n_cells, traj.n_genes, cc.output_stride);
    write_plot_deviation(out, traj, cc.output_stride);

    json rep = header(c, sys);
    json sat = json::array(), tight = json::array();
    for (bool b : cr.satisfied) sat.push_back(b);
    for (bool b : cr.tight_satisfied) tight.push_back(b);
    rep["consensus"] = json{{"lambda2", num(cr.lambda2)},
                            {"coupling", num(cr.coupling)},
                            {"z_m", nums(cr.z_m)},
                            {"bound", nums(cr.bound)},
                            {"measured_tail", nums(cr.measured_tail)},
                            {"satisfied", sat},
                            {"tight_bound", nums(cr.tight_bound)},
                            {"tight_satisfied", tight},
                            {"degenerate", cr.degenerate},
                            {"tail_possibly_transient", cr.tail_maybe_transient},
                            {"max_orthogonality_error", num(cr.max_orthogonality_error)}};
    if (c.model.cells->regular_degree) {
        const int d = *c.model.cells->regular_degree;
        rep["consensus"]["alon_boppana"] =
            json{{"degree", d}, {"bound", num(alon_boppana(d))}};
    }
    out.write_json("report.json", rep);
    return exit_code::ok;
}

int run_control(const ScenarioConfig& c, const MultiCellSystem& sys, Outputs& out) {
    const auto& k = *c.control;
    const bool multi = c.model.cells.has_value();
    std::vector<ControlTarget> targets;
    for (const auto& t : k.targets) targets.push_back({t.gene, t.cell, t.value});
    const ControlBounds bounds{k.lower, k.upper};
    const MultiCellState init = initial_state(c, sys.n_cells());
    std::vector<bool> mask;
    if (multi) {
        if (k.delta) {
            mask = *k.delta;
        } else {
            Rng rng(c.seed);
            for (std::size_t i = 0; i < sys.n_cells(); ++i)
                mask.push_back(rng.bernoulli(*k.delta_probability));
        }
    }
    const ControlProblem problem =
        multi ? ControlProblem::multi(sys, k.gene, bounds, targets, init, mask)
              : ControlProblem::single(sys.cell_model(0), k.gene, bounds, targets, init.cell(0));

    const ControlSolution sol = k.mode == "min_time" ? solve_min_time(problem, k.fbsm)
                                                     : fbsm_fixed_time(problem, k.horizon, k.fbsm);

    const std::size_t n = sys.n_genes();
    const std::size_t N = sol.z.size();
    auto bin = [N](std::size_t node) { return std::min(node, N - 1); };
    {
        auto f = out.open("trajectory.csv");
        f << "t,cell,gene,u,s,z,lambda_u,lambda_s,psi,H\n";
        for (std::size_t node : sample_rows(sol.times.size(), k.output_stride))
            for (std::size_t i = 0; i < sys.n_cells(); ++i)
                for (std::size_t g = 0; g < n; ++g) {
                    const auto& x = sol.states[node];
                    const auto& l = sol.costates[node];
                    f << fmt(sol.times[node]) << ',' << i << ',' << g << ','
                      << fmt(x[u_index(n, i, g)]) << ',' << fmt(x[s_index(n, i, g)]) << ','
                      << fmt(sol.z[bin(node)]) << ',' << fmt(l[u_index(n, i, g)]) << ','
                      << fmt(l[s_index(n, i, g)]) << ',' << fmt(sol.psi[bin(node)]) << ','
                      << fmt(sol.hamiltonian[bin(node)]) << '\n';
                }
    }
    {
        auto f = out.open("plotdata_control.csv");
        f << "t,z,psi,H,is_t_star\n";
        for (std::size_t node : sample_rows(sol.times.size(), k.output_stride))
            f << fmt(sol.times[node]) << ',' << fmt(sol.z[bin(node)]) << ','
              << fmt(sol.psi[bin(node)]) << ',' << fmt(sol.hamiltonian[bin(node)]) << ','
              << (node + 1 == sol.times.size() ? 1 : 0) << '\n';
    }
    write_plot_s(out, sol.times, sol.states, sys.n_cells(), n, k.output_stride);

    const auto [zmin, zmax] = std::minmax_element(sol.z.begin(), sol.z.end());
    std::string profile = "mixed";
    if (*zmin == *zmax) {
        profile = *zmin == bounds.lower   ? "constant_lower"
                  : *zmin == bounds.upper ? "constant_upper"
                                          : "constant_interior";
    }
    json miss = json::array();
    for (std::size_t t = 0; t < targets.size(); ++t)
        miss.push_back(json{{"gene", targets[t].gene},
                            {"cell", targets[t].cell},
                            {"target", targets[t].value},
                            {"miss", num(sol.terminal_miss[t])},
                            {"hit", std::abs(sol.terminal_miss[t]) <= k.fbsm.target_tolerance}});
    json probes = json::array();
    for (const auto& p : sol.probes)
        probes.push_back(json{{"T", p.T},
                              {"sufficient", p.sufficient},
                              {"inner_converged", p.inner_converged},
                              {"bracketed", p.bracketed}});
    json cells_state = json::array();
    if (multi) {
        for (bool b : mask) cells_state.push_back(b);
    }
    json rep = header(c, sys);
    rep["control"] = json{{"mode", k.mode},
                          {"controlled_gene", k.gene},
                          {"bounds", json::array({k.lower, k.upper})},
                          {"T_star", num(sol.T_star)},
                          {"bins", N},
                          {"inner_converged", sol.inner_converged},
                          {"outer_converged", sol.outer_converged},
                          {"polished", sol.polished},
                          {"sweeps", sol.sweeps},
                          {"last_change", num(sol.last_change)},
                          {"z_profile", profile},
                          {"z_min", num(*zmin)},
                          {"z_max", num(*zmax)},
                          {"targets", miss},
                          {"transversality_residual", num(sol.transversality_residual)},
                          {"non_monotone", sol.non_monotone},
                          {"vacuous_control", problem.vacuous()},
                          {"probes", probes}};
    if (multi) rep["control"]["delta"] = cells_state;
    rep["final_state"] = state_blocks(sol.states.back(), sys.n_cells(), n);
    out.write_json("report.json", rep);
    return sol.inner_converged ? exit_code::ok : exit_code::no_convergence;
}

int run_reachability(const ScenarioConfig& c, const MultiCellSystem& sys, Outputs& out) {
    const auto& r = *c.reachability;
    const GrnModel model = sys.cell_model(0);
    const std::size_t n = model.n_genes();
    const MolecularGraph graph = molecular_graph(model.topology());

    CellState state(Vector(n, 1.0), Vector(n, 1.0));
    if (r.state) state = CellState(r.state->u, r.state->s);
    else if (c.initial) state = CellState(c.initial->states[0].u, c.initial->states[0].s);

    json edges = json::array();
    for (const auto& e : graph.edges()) {
        auto name = [n](std::size_t v) {
            return (v < n ? "u" : "s") + std::to_string(v < n ? v : v - n);
        };
        edges.push_back(json{{"from", name(e.from)}, {"to", name(e.to)}, {"sign", e.sign}});
    }
    const ControlProblem problem = ControlProblem::single(
        model, r.gene, ControlBounds{}, {ControlTarget{r.gene, 0, 0.0}}, state);
    json genes = json::array();
    for (std::size_t g = 0; g < n; ++g) {
        const auto du = molecular_distance(graph, r.gene, NodeKind::U, g);
        const auto ds = molecular_distance(graph, r.gene, NodeKind::S, g);
        json gj{{"gene", g},
                {"distance_u", du ? json(*du) : json("unreachable")},
                {"distance_s", ds ? json(*ds) : json("unreachable")}};
        if (g != r.gene) {
            gj["csp_sum_product"] = num(csp_sum_product(model, r.gene, g, state));
            gj["csp_sign"] = to_string(csp_sign(model, r.gene, g, r.csp_samples, c.seed));
        }
        const InfluenceReport inf =
            first_influence_order(problem, NodeKind::S, g, state.flat(), r.max_order, r.step);
        gj["first_influence_order_s"] = inf.order ? json(*inf.order) : json("none");
        gj["bracket_magnitudes"] = nums(inf.magnitudes);
        gj["bracket_floors"] = nums(inf.floors);
        genes.push_back(gj);
    }
    json rep = header(c, sys);
    rep["reachability"] = json{{"controlled_gene", r.gene},
                               {"splicing_edges", graph.splicing_edge_count()},
                               {"regulation_edges", graph.regulation_edge_count()},
                               {"edges", edges},
                               {"genes", genes}};
    out.write_json("report.json", rep);
    return exit_code::ok;
}

void write_error(Outputs& out, int code, const std::string& kind, const std::string& message) {
    out.write_json("error.json", json{{"exit_code", code}, {"error", kind}, {"message", message}});
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, const fs::path& out_dir) {
    Outputs out(out_dir);
    RunResult res;
    try {
        const MultiCellSystem sys = build_system(config.model);
        if (config.kind == "simulate") res.exit_code = run_simulate(config, sys, out);
        else if (config.kind == "equilibrium") res.exit_code = run_equilibrium(config, sys, out);
        else if (config.kind == "stability") res.exit_code = run_stability(config, sys, out);
        else if (config.kind == "consensus") res.exit_code = run_consensus(config, sys, out);
        else if (config.kind == "control") res.exit_code = run_control(config, sys, out);
        else if (config.kind == "reachability") res.exit_code = run_reachability(config, sys, out);
        if (res.exit_code == exit_code::no_convergence) {
            res.message = "solver did not converge";
            write_error(out, res.exit_code, "non_convergence", res.message);
        }
    } catch (const UnreachableError& e) {
        res.exit_code = exit_code::unreachable;
        res.message = e.what();
        write_error(out, res.exit_code, e.structural() ? "structurally_unreachable"
                                                       : "unreachable_in_bracket", res.message);
    } catch (const DivergenceError& e) {
        res.exit_code = exit_code::divergence;
        res.message = e.what();
        write_error(out, res.exit_code, "divergence", res.message);
    } catch (const NumericError& e) {
        res.exit_code = exit_code::no_convergence;
        res.message = e.what();
        write_error(out, res.exit_code, "non_convergence", res.message);
    } catch (const ModeError& e) {
        res.exit_code = exit_code::invariant;
        res.message = e.what();
        write_error(out, res.exit_code, "mode", res.message);
    } catch (const DomainError& e) {
        res.exit_code = exit_code::invariant;
        res.message = e.what();
        write_error(out, res.exit_code, "domain", res.message);
    } catch (const ArgumentError& e) {
        res.exit_code = exit_code::invariant;
        res.message = e.what();
        write_error(out, res.exit_code, "argument", res.message);
    }
    res.files = out.files();
    return res;
}

}  // namespace grnvelo

#include "grnvelo/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "grnvelo/dynamics.hpp"
#include "grnvelo/errors.hpp"

namespace grnvelo {

namespace {

void require_positive(const Vector& v, const char* name) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!(v[i] > 0.0))
            throw DomainError(std::string(name) + "[" + std::to_string(i) + "] must be > 0");
}

std::string gene_label(const char* what, std::size_t cell, std::size_t gene, bool multi) {
    std::ostringstream os;
    os << what << " gene " << gene;
    if (multi) os << " cell " << cell;
    return os.str();
}

}  // namespace

Vector EquilibriumReport::flat_state(std::size_t n_genes) const {
    Vector x;
    const std::size_t nc = s_star.size() / n_genes;
    for (std::size_t i = 0; i < nc; ++i) {
        x.insert(x.end(), u_star.begin() + i * n_genes, u_star.begin() + (i + 1) * n_genes);
        x.insert(x.end(), s_star.begin() + i * n_genes, s_star.begin() + (i + 1) * n_genes);
    }
    return x;
}

Matrix build_lambda_single(const GrnModel& model) {
    const auto& topo = model.topology();
    const auto& r = model.rates();
    require_positive(r.gamma(), "gamma");
    const std::size_t n = model.n_genes();
    Matrix L(n, n);
    for (std::size_t g = 0; g < n; ++g)
        for (std::size_t q = 0; q < n; ++q)
            L(g, q) = r.alpha()[g] * topo.w_plus()(g, q) / (topo.kappa() * r.gamma()[g]);
    return L;
}

Matrix build_lambda_multi(const MultiCellSystem& system) {
    const std::size_t n = system.n_genes();
    const std::size_t nc = system.n_cells();
    Matrix L(n * nc, n * nc);
    for (std::size_t i = 0; i < nc; ++i) {
        const Matrix block = build_lambda_single(system.cell_model(i));
        for (std::size_t g = 0; g < n; ++g) {
            for (std::size_t h = 0; h < n; ++h) L(i * n + g, i * n + h) = block(g, h);
            for (std::size_t j = 0; j < nc; ++j) {
                if (j == i) continue;
                L(i * n + g, j * n + g) =
                    system.coupling() * system.adjacency()(i, j) / system.rates(i).gamma()[g];
            }
        }
    }
    return L;
}

namespace {

struct PowerResult {
    bool converged = false;
    double value = 0.0;
    double previous = 0.0;
};

PowerResult power_iterate(const Matrix& m, double shift, double scale, SpectralOptions options) {
    const std::size_t n = m.rows();
    Vector x(n, 1.0), y(n);
    PowerResult res;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = shift * x[i];
            const auto row = m.row(i);
            for (std::size_t j = 0; j < n; ++j) acc += row[j] * x[j];
            y[i] = acc;
        }
        const double lambda = norm_inf(y);
        res.previous = prev;
        res.value = lambda;
        if (lambda == 0.0) {
            res.converged = true;
            return res;
        }
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / lambda;
        if (std::abs(lambda - prev) <= options.tolerance * std::max(lambda, scale)) {
            res.converged = true;
            return res;
        }
        prev = lambda;
    }
    return res;
}

}  // namespace

double spectral_radius(const Matrix& m, SpectralOptions options) {
    if (!m.is_square()) throw ArgumentError("spectral_radius: matrix must be square");
    if (m.rows() == 0) return 0.0;
    for (double v : m.data())
        if (!std::isfinite(v) || v < 0.0)
            throw DomainError("spectral_radius: entries must be finite and >= 0");
    double scale = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) scale = std::max(scale, norm1(m.row(i)));

    PowerResult r = power_iterate(m, options.shift, scale, options);
    double shift = options.shift;
    if (!r.converged) {
        // Periodic (imprimitive) matrices keep several eigenvalues on the spectral circle;
        // a shift by the max row sum makes the Perron root strictly dominant.
        shift = std::max(scale, options.shift);
        r = power_iterate(m, shift, scale, options);
    }
    if (!r.converged) {
        std::ostringstream os;
        os.precision(17);
        os << "spectral_radius: power iteration did not converge (last estimates "
           << r.previous - shift << ", " << r.value - shift << ")";
        throw NumericError(os.str());
    }
    return std::max(0.0, r.value - shift);
}

namespace {

// One application of the fixed-point map; single-cell systems reduce to alpha R / gamma.
void fixed_point_map(const MultiCellSystem& sys, const Vector& s, Vector& out) {
    const std::size_t n = sys.n_genes();
    const std::size_t nc = sys.n_cells();
    const auto& topo = sys.topology();
    const double c = sys.coupling();
    for (std::size_t i = 0; i < nc; ++i) {
        const std::span<const double> si(s.data() + i * n, n);
        const auto& r = sys.rates(i);
        const double deg = nc > 1 ? c * sys.degree(i) : 0.0;
        for (std::size_t g = 0; g < n; ++g) {
            double num = r.alpha()[g] * (topo.numerator(g, si) / topo.denominator(g, si));
            if (deg != 0.0) {
                double acc = 0.0;
                for (std::size_t j = 0; j < nc; ++j)
                    if (j != i) acc += sys.adjacency()(i, j) * s[j * n + g];
                num += c * acc;
            }
            out[i * n + g] = num / (r.gamma()[g] + deg);
        }
    }
}

struct IterationResult {
    bool converged = false;
    std::size_t iterations = 0;
    double residual = 0.0;
    Vector s;
};

IterationResult iterate(const MultiCellSystem& sys, double damping, EquilibriumOptions options) {
    const std::size_t dim = sys.n_genes() * sys.n_cells();
    IterationResult res;
    res.s.assign(dim, 0.0);
    Vector fs(dim);
    for (std::size_t it = 0; it <= options.max_iterations; ++it) {
        fixed_point_map(sys, res.s, fs);
        double r = 0.0;
        for (std::size_t k = 0; k < dim; ++k) r = std::max(r, std::abs(fs[k] - res.s[k]));
        res.residual = r;
        res.iterations = it;
        if (!std::isfinite(r)) return res;
        if (r <= options.tolerance) {
            res.converged = true;
            return res;
        }
        if (it == options.max_iterations) break;
        for (std::size_t k = 0; k < dim; ++k)
            res.s[k] = damping == 1.0 ? fs[k] : (1.0 - damping) * res.s[k] + damping * fs[k];
    }
    return res;
}

EquilibriumReport solve(const MultiCellSystem& sys, bool single_cell_u, EquilibriumOptions options,
                        const Matrix& lambda) {
    for (const auto& r : sys.cell_rates()) {
        require_positive(r.gamma(), "gamma");
        require_positive(r.beta(), "beta");
    }
    EquilibriumReport rep;
    rep.rho_lambda = spectral_radius(lambda);
    rep.feasible = rep.rho_lambda < 1.0;

    IterationResult it = iterate(sys, 1.0, options);
    if (!it.converged) {
        IterationResult damped = iterate(sys, 0.5, options);
        if (damped.converged) {
            it = std::move(damped);
            rep.damping = 0.5;
        }
    }
    rep.converged = it.converged;
    rep.iterations = it.iterations;
    rep.residual = it.residual;
    rep.s_star = it.s;
    const std::size_t n = sys.n_genes();
    rep.u_star.assign(rep.s_star.size(), 0.0);
    for (std::size_t i = 0; i < sys.n_cells(); ++i) {
        const auto& r = sys.rates(i);
        const std::span<const double> si(rep.s_star.data() + i * n, n);
        for (std::size_t g = 0; g < n; ++g) {
            const std::size_t k = i * n + g;
            if (single_cell_u) {
                rep.u_star[k] = r.gamma()[g] * rep.s_star[k] / r.beta()[g];
            } else {
                const auto& topo = sys.topology();
                rep.u_star[k] =
                    r.alpha()[g] * (topo.numerator(g, si) / topo.denominator(g, si)) / r.beta()[g];
            }
        }
    }
    return rep;
}

}  // namespace

EquilibriumReport solve_equilibrium(const GrnModel& model, EquilibriumOptions options) {
    return solve(MultiCellSystem::from_model(model), true, options, build_lambda_single(model));
}

EquilibriumReport solve_equilibrium(const MultiCellSystem& system, EquilibriumOptions options) {
    return solve(system, false, options, build_lambda_multi(system));
}

std::string to_string(StabilityMode mode) {
    return mode == StabilityMode::Linear ? "linear-no-repressors" : "lyapunov-nonlinear";
}

Matrix linear_system_matrix(const MultiCellSystem& system) {
    const std::size_t n = system.n_genes();
    const std::size_t nc = system.n_cells();
    const auto& topo = system.topology();
    Matrix P(2 * n * nc, 2 * n * nc);
    for (std::size_t i = 0; i < nc; ++i) {
        const auto& r = system.rates(i);
        for (std::size_t g = 0; g < n; ++g) {
            const std::size_t ug = u_index(n, i, g);
            const std::size_t sg = s_index(n, i, g);
            P(ug, ug) = -r.beta()[g];
            for (std::size_t h = 0; h < n; ++h)
                P(ug, s_index(n, i, h)) = r.alpha()[g] * topo.w_plus()(g, h) / topo.kappa();
            P(sg, ug) = r.beta()[g];
            P(sg, sg) = -r.gamma()[g];
            if (nc > 1 && system.coupling() != 0.0) {
                for (std::size_t j = 0; j < nc; ++j) {
                    if (j == i) continue;
                    const double a = system.coupling() * system.adjacency()(i, j);
                    P(sg, sg) -= a;
                    P(sg, s_index(n, j, g)) += a;
                }
            }
        }
    }
    return P;
}

namespace {

StabilityReport linear_report(const MultiCellSystem& sys, bool multi) {
    const auto& topo = sys.topology();
    if (topo.has_repressors())
        throw ModeError("linear stability check requires W_minus = 0; use lyapunov mode");
    StabilityReport rep;
    rep.mode = StabilityMode::Linear;
    const std::size_t n = sys.n_genes();
    bool ok = true;
    for (std::size_t i = 0; i < sys.n_cells(); ++i) {
        const auto& r = sys.rates(i);
        for (std::size_t g = 0; g < n; ++g) {
            double row = 0.0;
            for (double w : topo.w_plus().row(g)) row += w;
            const double drive = multi ? r.alpha()[g] / topo.kappa() * row : r.alpha()[g] * row;
            ConditionCheck c1{gene_label("gamma > beta", i, g, multi), r.gamma()[g], r.beta()[g],
                              r.gamma()[g] > r.beta()[g]};
            ConditionCheck c2{gene_label("beta > activation drive", i, g, multi), r.beta()[g],
                              drive, r.beta()[g] > drive};
            ok = ok && c1.passed && c2.passed;
            rep.checks.push_back(std::move(c1));
            rep.checks.push_back(std::move(c2));
        }
    }
    rep.p_max_real = max_real_eigenvalue(linear_system_matrix(sys));
    rep.verdict = ok;
    if (!ok) rep.reason = "inequality violated";
    return rep;
}

StabilityReport lyapunov_report(const MultiCellSystem& sys, bool multi) {
    const auto& topo = sys.topology();
    StabilityReport rep;
    rep.mode = StabilityMode::Lyapunov;
    const std::size_t n = sys.n_genes();
    rep.c1 = std::max(topo.w_plus().max_entry(), topo.w_minus().max_entry());
    rep.delta = estimate_delta(topo.w_minus());
    if (rep.delta <= 0.0) {
        rep.verdict = false;
        rep.reason = "no uniform repression floor";
        return rep;
    }
    const double kappa = topo.kappa();
    double base;
    if (rep.c1 == rep.delta) {
        rep.omega_guarded = true;
        base = rep.c1 / kappa;
    } else {
        base = std::max(rep.c1 / kappa, std::pow(rep.c1, 3) /
                                            (4.0 * rep.delta * kappa * (rep.c1 - rep.delta)));
    }
    const double scale = multi ? std::sqrt(static_cast<double>(n)) : static_cast<double>(n);
    bool ok = true;
    for (std::size_t i = 0; i < sys.n_cells(); ++i) {
        const auto& r = sys.rates(i);
        const double omega = scale * base;
        const double anorm = multi ? norm2(r.alpha()) : norm_inf(r.alpha());
        rep.omega.push_back(omega);
        rep.alpha_norm.push_back(anorm);
        const double half = omega * anorm / 2.0;
        for (std::size_t g = 0; g < n; ++g) {
            const double b = r.beta()[g];
            ConditionCheck cb{gene_label("beta > omega |alpha| / 2", i, g, multi), b, half,
                              b > half};
            const double rhs = b > half ? half + b * b / (4.0 * (b - half))
                                        : std::numeric_limits<double>::infinity();
            ConditionCheck cg{gene_label("gamma bound", i, g, multi), r.gamma()[g], rhs,
                              r.gamma()[g] > rhs};
            ok = ok && cb.passed && cg.passed;
            rep.checks.push_back(std::move(cb));
            rep.checks.push_back(std::move(cg));
        }
    }
    rep.verdict = ok;
    if (!ok) rep.reason = "inequality violated";
    return rep;
}

}  // namespace

StabilityReport check_stability_linear(const GrnModel& model) {
    return linear_report(MultiCellSystem::from_model(model), false);
}

StabilityReport check_stability_linear(const MultiCellSystem& system) {
    return linear_report(system, true);
}

StabilityReport check_stability_lyapunov(const GrnModel& model) {
    return lyapunov_report(MultiCellSystem::from_model(model), false);
}

StabilityReport check_stability_lyapunov(const MultiCellSystem& system) {
    return lyapunov_report(system, true);
}

double estimate_delta(const Matrix& w_minus) {
    if (!w_minus.is_square()) throw ArgumentError("estimate_delta: matrix must be square");
    return std::max(0.0, w_minus.min_entry());
}

double lyapunov_value(std::span<const double> x, std::span<const double> x_star) {
    if (x.size() != x_star.size()) throw ArgumentError("lyapunov_value: dimension mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - x_star[k];
        acc += d * d;
    }
    return 0.5 * acc;
}

double lyapunov_derivative(const MultiCellSystem& system, std::span<const double> x,
                           std::span<const double> x_star) {
    const std::size_t dim = 2 * system.n_genes() * system.n_cells();
    if (x.size() != dim || x_star.size() != dim)
        throw ArgumentError("lyapunov_derivative: dimension mismatch");
    Vector f(dim);
    rhs_flat(system, x, f);
    double acc = 0.0;
    for (std::size_t k = 0; k < dim; ++k) acc += (x[k] - x_star[k]) * f[k];
    return acc;
}

double lyapunov_value(const GrnModel& model, const CellState& state, const CellState& equilibrium) {
    if (state.n_genes() != model.n_genes() || equilibrium.n_genes() != model.n_genes())
        throw ArgumentError("lyapunov_value: dimension mismatch");
    return lyapunov_value(state.flat(), equilibrium.flat());
}

double lyapunov_derivative(const GrnModel& model, const CellState& state,
                           const CellState& equilibrium) {
    return lyapunov_derivative(MultiCellSystem::from_model(model), state.flat(),
                               equilibrium.flat());
}

}  // namespace grnvelo

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "grnvelo/model.hpp"

namespace grnvelo {

struct EquilibriumReport {
    bool converged = false;
    Vector s_star;  // cell-major for multi-cell systems
    Vector u_star;
    std::size_t iterations = 0;
    double residual = 0.0;  // ||F(s*) - s*||_inf
    double rho_lambda = 0.0;
    bool feasible = false;
    double damping = 1.0;  // 1: plain iteration; < 1 if the damped fallback was needed

    // Flat [u, s] layout per cell, ready for the dynamics functions.
    Vector flat_state(std::size_t n_genes) const;
};

struct EquilibriumOptions {
    double tolerance = 1e-12;
    std::size_t max_iterations = 100000;
};

Matrix build_lambda_single(const GrnModel& model);
Matrix build_lambda_multi(const MultiCellSystem& system);

struct SpectralOptions {
    double shift = 1e-12;
    double tolerance = 1e-10;
    std::size_t max_iterations = 10000;
};

double spectral_radius(const Matrix& m, SpectralOptions options = {});

EquilibriumReport solve_equilibrium(const GrnModel& model, EquilibriumOptions options = {});
EquilibriumReport solve_equilibrium(const MultiCellSystem& system, EquilibriumOptions options = {});

struct ConditionCheck {
    std::string label;
    double lhs = 0.0;
    double rhs = 0.0;
    bool passed = false;
};

enum class StabilityMode { Linear, Lyapunov };

struct StabilityReport {
    StabilityMode mode = StabilityMode::Linear;
    std::vector<ConditionCheck> checks;
    double delta = 0.0;
    double c1 = 0.0;
    Vector omega;       // one entry (single cell) or one per cell
    Vector alpha_norm;  // norm of alpha used against each omega
    bool omega_guarded = false;
    double p_max_real = 0.0;  // linear mode: max real part of the Jacobian eigenvalues
    bool verdict = false;
    std::string reason;
};

std::string to_string(StabilityMode mode);

// Jacobian of the uncontrolled dynamics when W- = 0 (constant matrix).
Matrix linear_system_matrix(const MultiCellSystem& system);

StabilityReport check_stability_linear(const GrnModel& model);
StabilityReport check_stability_linear(const MultiCellSystem& system);
StabilityReport check_stability_lyapunov(const GrnModel& model);
StabilityReport check_stability_lyapunov(const MultiCellSystem& system);

double estimate_delta(const Matrix& w_minus);

// V = 1/2 ||x - x*||^2 and dV/dt = <x - x*, f(x)> on the flat layout.
double lyapunov_value(std::span<const double> x, std::span<const double> x_star);
double lyapunov_derivative(const MultiCellSystem& system, std::span<const double> x,
                           std::span<const double> x_star);
double lyapunov_value(const GrnModel& model, const CellState& state, const CellState& equilibrium);
double lyapunov_derivative(const GrnModel& model, const CellState& state,
                           const CellState& equilibrium);

}  // namespace grnvelo

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "grnvelo/model.hpp"

namespace grnvelo {

inline constexpr double kSwitchEpsilon = 1e-12;

struct ControlTarget {
    std::size_t gene = 0;
    std::size_t cell = 0;
    double value = 0.0;

    friend bool operator==(const ControlTarget&, const ControlTarget&) = default;
};

/// Minimum-time problem for a single controlled gene q. Single-cell problems are held as a
/// one-cell system with mask (1); multi_cell() distinguishes the switch-function form.
class ControlProblem {
public:
    static ControlProblem single(GrnModel model, std::size_t q, ControlBounds bounds,
                                 std::vector<ControlTarget> targets, const CellState& initial);
    static ControlProblem multi(MultiCellSystem system, std::size_t q, ControlBounds bounds,
                                std::vector<ControlTarget> targets, const MultiCellState& initial,
                                std::vector<bool> delta_mask);

    const MultiCellSystem& system() const noexcept { return system_; }
    bool multi_cell() const noexcept { return multi_; }
    std::size_t controlled_gene() const noexcept { return q_; }
    const ControlBounds& bounds() const noexcept { return bounds_; }
    const std::vector<ControlTarget>& targets() const noexcept { return targets_; }
    const Vector& initial() const noexcept { return initial_; }
    const Vector& delta() const noexcept { return delta_; }
    std::size_t n_genes() const noexcept { return system_.n_genes(); }
    std::size_t n_cells() const noexcept { return system_.n_cells(); }
    std::size_t dim() const noexcept { return 2 * n_genes() * n_cells(); }
    // True when no gene is activated by q, so z has no effect on the dynamics.
    bool vacuous() const noexcept { return vacuous_; }

    // Per-cell effective multiplier delta_i z + (1 - delta_i).
    void effective_control(double z, std::span<double> out) const;
    // Sum over treated cells of s_i^q (single cell: s^q).
    double controlled_level(std::span<const double> x) const;

private:
    ControlProblem(MultiCellSystem system, bool multi, std::size_t q, ControlBounds bounds,
                   std::vector<ControlTarget> targets, Vector initial, Vector delta);

    MultiCellSystem system_;
    bool multi_;
    std::size_t q_;
    ControlBounds bounds_;
    std::vector<ControlTarget> targets_;
    Vector initial_;
    Vector delta_;
    bool vacuous_ = false;
};

// Flat-layout evaluations. State and costate share the [u, s] per-cell layout.
Vector controlled_rhs(const ControlProblem& problem, std::span<const double> x, double z);
double hamiltonian(const ControlProblem& problem, std::span<const double> x,
                   std::span<const double> lambda, double z);
Vector costate_rhs(const ControlProblem& problem, std::span<const double> x,
                   std::span<const double> lambda, double z);
double switch_function(const ControlProblem& problem, std::span<const double> x,
                       std::span<const double> lambda);

double bang_bang_update(double psi, double s_q, ControlBounds bounds, double previous_z);

struct FbsmConfig {
    std::size_t bins = 2000;
    double damping = 0.5;
    double penalty = 100.0;
    double inner_tolerance = 1e-8;
    std::size_t inner_max_sweeps = 500;
    double target_tolerance = 1e-3;
    double t_lo = 0.01;
    double t_hi = 20.0;
    std::size_t outer_max_bisections = 40;

    void validate() const;
    friend bool operator==(const FbsmConfig&, const FbsmConfig&) = default;
};

struct BisectionProbe {
    double T = 0.0;
    bool sufficient = false;
    bool inner_converged = false;
    bool bracketed = false;  // sufficiency certified by iterates on both sides of the target
};

struct ControlSolution {
    double T_star = 0.0;
    Vector times;                  // bins + 1 nodes
    Vector z;                      // one value per bin
    std::vector<Vector> states;    // per node, flat
    std::vector<Vector> costates;  // per node, flat
    Vector hamiltonian;            // per bin, at the bin midpoint
    Vector psi;                    // per bin, at the bin midpoint
    Vector controlled_level;       // per bin, s^q (or treated-cell sum) at the midpoint
    bool inner_converged = false;
    bool outer_converged = false;
    bool polished = false;
    bool bracketed = false;
    bool non_monotone = false;
    std::size_t sweeps = 0;
    double last_change = 0.0;
    Vector terminal_miss;  // s^r(T) - target, per target
    double transversality_residual = 0.0;
    std::vector<BisectionProbe> probes;

    bool hits(double tolerance) const;
};

struct FbsmOptions {
    // Stop sweeping as soon as the iterates certify that T suffices.
    bool stop_on_bracket = false;
};

ControlSolution fbsm_fixed_time(const ControlProblem& problem, double T, const FbsmConfig& config,
                                FbsmOptions options = {});

ControlSolution solve_min_time(const ControlProblem& problem, const FbsmConfig& config);

// Throws UnreachableError(structural) when no target can be influenced by the control.
void check_structural_reachability(const ControlProblem& problem);

}  // namespace grnvelo

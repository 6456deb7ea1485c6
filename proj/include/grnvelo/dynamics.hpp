#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grnvelo/model.hpp"

namespace grnvelo {

struct Derivative {
    Vector du;
    Vector ds;
};

Derivative rhs_single_cell(const GrnModel& model, const CellState& state);
// Flattened cell-major derivative [du_0, ds_0, du_1, ds_1, ...].
Vector rhs_multi_cell(const MultiCellSystem& system, const MultiCellState& state);

Vector velocity(const GrnModel& model, const CellState& state);
// Cell-major spliced derivatives [ds_0, ds_1, ...].
Vector velocity(const MultiCellSystem& system, const MultiCellState& state);

// Unchecked evaluation on the flat layout. zq[i] scales column q of W+ in cell i
// (empty span: no control). Coupling is skipped entirely when c == 0.
void rhs_flat(const MultiCellSystem& system, std::span<const double> x, std::span<double> out,
              std::size_t q = kNoGene, std::span<const double> zq = {});

struct InterventionEvent {
    double time = 0.0;
    std::optional<std::size_t> cell;  // nullopt: every cell
    std::size_t gene = 0;
    RateKind parameter = RateKind::Alpha;
    double value = 0.0;

    friend bool operator==(const InterventionEvent&, const InterventionEvent&) = default;
};

class InterventionSchedule {
public:
    InterventionSchedule() = default;
    explicit InterventionSchedule(std::vector<InterventionEvent> events);

    const std::vector<InterventionEvent>& events() const noexcept { return events_; }
    bool empty() const noexcept { return events_.empty(); }

    friend bool operator==(const InterventionSchedule&, const InterventionSchedule&) = default;

private:
    std::vector<InterventionEvent> events_;
};

struct Trajectory {
    Vector times;
    std::vector<Vector> states;  // flat layout per sample
    double dt = 0.0;
    std::string integrator = "rk4";
    std::string model_hash;
    std::size_t n_cells = 1;
    std::size_t n_genes = 0;

    std::size_t size() const noexcept { return times.size(); }
    double u(std::size_t k, std::size_t cell, std::size_t gene) const {
        return states[k][u_index(n_genes, cell, gene)];
    }
    double s(std::size_t k, std::size_t cell, std::size_t gene) const {
        return states[k][s_index(n_genes, cell, gene)];
    }
};

using VectorField = std::function<void(double t, std::span<const double> x, std::span<double> dx)>;

// Number of fixed steps used for horizon T at step dt.
std::size_t step_count(double T, double dt);

// Classical RK4 step in place; scratch must hold 5*x.size() doubles.
void rk4_step(const VectorField& f, double t, double dt, std::span<double> x,
              std::span<double> scratch);

Trajectory integrate_field(const VectorField& f, const Vector& x0, double T, double dt);
Trajectory integrate(const GrnModel& model, const CellState& initial, double T, double dt,
                     const InterventionSchedule& schedule = {});
Trajectory integrate(const MultiCellSystem& system, const MultiCellState& initial, double T,
                     double dt, const InterventionSchedule& schedule = {});

std::string model_hash(const MultiCellSystem& system);

struct NonnegativityReport {
    bool passed = true;
    std::size_t trials = 0;
    std::size_t checked_coordinates = 0;
    // First failure, if any.
    Vector counterexample;
    std::size_t coordinate = 0;
    double value = 0.0;
};

NonnegativityReport check_essential_nonnegativity(const MultiCellSystem& system,
                                                  std::size_t trials, std::uint64_t seed);

}  // namespace grnvelo

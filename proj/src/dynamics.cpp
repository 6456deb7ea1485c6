#include "grnvelo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "grnvelo/errors.hpp"
#include "grnvelo/rng.hpp"

namespace grnvelo {

namespace {

void cell_rhs(const GrnTopology& topo, const RateParams& rates, std::span<const double> x,
              std::span<double> out, std::size_t q, double zq) {
    const std::size_t n = topo.n_genes();
    const auto u = x.subspan(0, n);
    const auto s = x.subspan(n, n);
    const auto& a = rates.alpha();
    const auto& b = rates.beta();
    const auto& c = rates.gamma();
    for (std::size_t g = 0; g < n; ++g) {
        const double r = topo.numerator(g, s, q, zq) / topo.denominator(g, s);
        out[g] = a[g] * r - b[g] * u[g];
        out[n + g] = b[g] * u[g] - c[g] * s[g];
    }
}

void check_multi_state(const MultiCellSystem& system, const MultiCellState& state) {
    if (state.n_cells() != system.n_cells())
        throw ArgumentError("state has " + std::to_string(state.n_cells()) + " cells, system has " +
                            std::to_string(system.n_cells()));
    if (state.cell(0).n_genes() != system.n_genes())
        throw ArgumentError("state gene count does not match the system");
}

}  // namespace

void rhs_flat(const MultiCellSystem& system, std::span<const double> x, std::span<double> out,
              std::size_t q, std::span<const double> zq) {
    const std::size_t n = system.n_genes();
    const std::size_t nc = system.n_cells();
    const std::size_t block = 2 * n;
    for (std::size_t i = 0; i < nc; ++i) {
        cell_rhs(system.topology(), system.rates(i), x.subspan(i * block, block),
                 out.subspan(i * block, block), zq.empty() ? kNoGene : q,
                 zq.empty() ? 1.0 : zq[i]);
    }
    const double c = system.coupling();
    if (c == 0.0 || nc == 1) return;
    const Matrix& A = system.adjacency();
    for (std::size_t i = 0; i < nc; ++i) {
        for (std::size_t g = 0; g < n; ++g) {
            const double si = x[i * block + n + g];
            double acc = 0.0;
            for (std::size_t j = 0; j < nc; ++j) {
                const double aij = A(i, j);
                if (aij != 0.0) acc += aij * (x[j * block + n + g] - si);
            }
            out[i * block + n + g] += c * acc;
        }
    }
}

Derivative rhs_single_cell(const GrnModel& model, const CellState& state) {
    const std::size_t n = model.n_genes();
    if (state.n_genes() != n) throw ArgumentError("state gene count does not match the model");
    const Vector x = state.flat();
    Vector out(2 * n);
    cell_rhs(model.topology(), model.rates(), x, out, kNoGene, 1.0);
    return {Vector(out.begin(), out.begin() + n), Vector(out.begin() + n, out.end())};
}

Vector rhs_multi_cell(const MultiCellSystem& system, const MultiCellState& state) {
    check_multi_state(system, state);
    const Vector x = state.flat();
    Vector out(x.size());
    rhs_flat(system, x, out);
    return out;
}

Vector velocity(const GrnModel& model, const CellState& state) {
    return rhs_single_cell(model, state).ds;
}

Vector velocity(const MultiCellSystem& system, const MultiCellState& state) {
    const Vector d = rhs_multi_cell(system, state);
    const std::size_t n = system.n_genes();
    Vector v;
    v.reserve(n * system.n_cells());
    for (std::size_t i = 0; i < system.n_cells(); ++i)
        for (std::size_t g = 0; g < n; ++g) v.push_back(d[s_index(n, i, g)]);
    return v;
}

InterventionSchedule::InterventionSchedule(std::vector<InterventionEvent> events)
    : events_(std::move(events)) {
    for (std::size_t k = 0; k < events_.size(); ++k) {
        const auto& e = events_[k];
        if (!std::isfinite(e.time) || e.time < 0.0)
            throw DomainError("intervention " + std::to_string(k) + ": time must be >= 0");
        if (!std::isfinite(e.value) || e.value < 0.0)
            throw DomainError("intervention " + std::to_string(k) + ": value must be >= 0");
        if (k > 0 && e.time < events_[k - 1].time)
            throw ArgumentError("intervention times must be sorted ascending");
    }
}

std::size_t step_count(double T, double dt) {
    if (!(T > 0.0) || !std::isfinite(T)) throw ArgumentError("horizon T must be > 0");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("step dt must be > 0");
    if (dt > T) throw ArgumentError("step dt must not exceed the horizon T");
    return static_cast<std::size_t>(std::floor(T / dt + 1e-9));
}

void rk4_step(const VectorField& f, double t, double dt, std::span<double> x,
              std::span<double> scratch) {
    const std::size_t n = x.size();
    auto k1 = scratch.subspan(0, n);
    auto k2 = scratch.subspan(n, n);
    auto k3 = scratch.subspan(2 * n, n);
    auto k4 = scratch.subspan(3 * n, n);
    auto tmp = scratch.subspan(4 * n, n);
    f(t, x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
    f(t + 0.5 * dt, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
    f(t + 0.5 * dt, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
    f(t + dt, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

namespace {

void check_finite(std::span<const double> x, std::size_t step) {
    for (double v : x)
        if (!std::isfinite(v))
            throw DivergenceError("non-finite state at step " + std::to_string(step), step);
}

}  // namespace

Trajectory integrate_field(const VectorField& f, const Vector& x0, double T, double dt) {
    const std::size_t steps = step_count(T, dt);
    Trajectory traj;
    traj.dt = dt;
    traj.n_genes = x0.size() / 2;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    Vector x = x0;
    Vector scratch(5 * x.size());
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    for (std::size_t k = 0; k < steps; ++k) {
        rk4_step(f, static_cast<double>(k) * dt, dt, x, scratch);
        check_finite(x, k + 1);
        traj.times.push_back(static_cast<double>(k + 1) * dt);
        traj.states.push_back(x);
    }
    return traj;
}

Trajectory integrate(const GrnModel& model, const CellState& initial, double T, double dt,
                     const InterventionSchedule& schedule) {
    return integrate(MultiCellSystem::from_model(model), MultiCellState({initial}), T, dt,
                     schedule);
}

Trajectory integrate(const MultiCellSystem& system, const MultiCellState& initial, double T,
                     double dt, const InterventionSchedule& schedule) {
    check_multi_state(system, initial);
    const std::size_t steps = step_count(T, dt);
    const std::size_t n = system.n_genes();
    std::vector<std::size_t> event_step;
    for (const auto& e : schedule.events()) {
        if (e.time > T) throw ArgumentError("intervention time exceeds the horizon");
        if (e.gene >= n) throw ArgumentError("intervention gene index out of range");
        if (e.cell && *e.cell >= system.n_cells())
            throw ArgumentError("intervention cell index out of range");
        event_step.push_back(static_cast<std::size_t>(std::llround(e.time / dt)));
    }

    MultiCellSystem current = system;
    const VectorField field = [&current](double, std::span<const double> x, std::span<double> dx) {
        rhs_flat(current, x, dx);
    };

    Trajectory traj;
    traj.dt = dt;
    traj.n_cells = system.n_cells();
    traj.n_genes = n;
    traj.model_hash = model_hash(system);
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);

    Vector x = initial.flat();
    Vector scratch(5 * x.size());
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    std::size_t next_event = 0;
    for (std::size_t k = 0; k < steps; ++k) {
        while (next_event < event_step.size() && event_step[next_event] <= k) {
            const auto& e = schedule.events()[next_event];
            if (e.cell) {
                current = current.with_rate(*e.cell, e.parameter, e.gene, e.value);
            } else {
                for (std::size_t i = 0; i < current.n_cells(); ++i)
                    current = current.with_rate(i, e.parameter, e.gene, e.value);
            }
            ++next_event;
        }
        rk4_step(field, static_cast<double>(k) * dt, dt, x, scratch);
        check_finite(x, k + 1);
        traj.times.push_back(static_cast<double>(k + 1) * dt);
        traj.states.push_back(x);
    }
    return traj;
}

std::string model_hash(const MultiCellSystem& system) {
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&h](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ull;
        }
    };
    const auto& topo = system.topology();
    feed(static_cast<double>(system.n_genes()));
    feed(static_cast<double>(system.n_cells()));
    feed(topo.kappa());
    for (double v : topo.w_plus().data()) feed(v);
    for (double v : topo.w_minus().data()) feed(v);
    for (const auto& r : system.cell_rates()) {
        for (double v : r.alpha()) feed(v);
        for (double v : r.beta()) feed(v);
        for (double v : r.gamma()) feed(v);
    }
    for (double v : system.adjacency().data()) feed(v);
    feed(system.coupling());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

NonnegativityReport check_essential_nonnegativity(const MultiCellSystem& system,
                                                  std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw ArgumentError("trials must be >= 1");
    Rng rng(seed);
    NonnegativityReport report;
    report.trials = trials;
    const std::size_t dim = 2 * system.n_genes() * system.n_cells();
    Vector x(dim), dx(dim);
    for (std::size_t t = 0; t < trials; ++t) {
        for (auto& v : x) v = rng.bernoulli(0.5) ? 0.0 : rng.uniform();
        rhs_flat(system, x, dx);
        for (std::size_t k = 0; k < dim; ++k) {
            if (x[k] != 0.0) continue;
            ++report.checked_coordinates;
            if (dx[k] < 0.0 && report.passed) {
                report.passed = false;
                report.counterexample = x;
                report.coordinate = k;
                report.value = dx[k];
            }
        }
    }
    return report;
}

}  // namespace grnvelo

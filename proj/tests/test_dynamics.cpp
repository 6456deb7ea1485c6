#include <doctest.h>

#include <cmath>
#include <string>

#include "grnvelo/dynamics.hpp"
#include "grnvelo/errors.hpp"
#include "support.hpp"

using namespace grnvelo;
using namespace testkit;

namespace {

GrnModel single_gene(double a, double b, double g) {
    return GrnModel(GrnTopology(Matrix(1, 1), Matrix(1, 1), 1.0), RateParams({a}, {b}, {g}));
}

GrnModel chain2() {
    return GrnModel(GrnTopology(Matrix::from_rows({{0, 0}, {0.5, 0}}), Matrix(2, 2), 1.0),
                    RateParams({1, 1}, {1, 1}, {1, 1}));
}

// Closed-form solution of the unregulated single gene (beta != gamma).
Vector closed_form(double a, double b, double g, double u0, double s0, double t) {
    const double A = b * (u0 - a / b) / (g - b);
    const double B = s0 - a / g - A;
    return {a / b + (u0 - a / b) * std::exp(-b * t), a / g + A * std::exp(-b * t) + B * std::exp(-g * t)};
}

double closed_form_error(double dt) {
    const GrnModel m = single_gene(1.0, 2.0, 4.0);
    const Trajectory tr = integrate(m, CellState({1.5}, {0.1}), 5.0, dt);
    double err = 0.0;
    for (std::size_t k = 0; k < tr.size(); ++k)
        err = std::max(err, max_abs_diff(tr.states[k], closed_form(1, 2, 4, 1.5, 0.1, tr.times[k])));
    return err;
}

}  // namespace

TEST_CASE("single-cell rhs examples") {
    const Derivative d = rhs_single_cell(single_gene(1, 2, 4), CellState({0.5}, {0.25}));
    CHECK(d.du == Vector{0.0});
    CHECK(d.ds == Vector{0.0});

    const Derivative z = rhs_single_cell(single_gene(1.3, 2, 4), CellState({0.0}, {0.0}));
    CHECK(z.du == Vector{1.3});
    CHECK(z.ds == Vector{0.0});

    const Derivative c = rhs_single_cell(chain2(), CellState({1, 1.5}, {1, 1.5}));
    CHECK(c.du == Vector{0.0, 0.0});
    CHECK(c.ds == Vector{0.0, 0.0});

    CHECK_THROWS_AS(rhs_single_cell(chain2(), CellState({1}, {1})), ArgumentError);
}

TEST_CASE("rhs matches the definition on random systems") {
    Rng rng(12);
    for (int k = 0; k < 200; ++k) {
        const std::size_t ng = 1 + rng.index(4), nc = 1 + rng.index(4);
        const MultiCellSystem s = random_system(rng, ng, nc, rng.uniform(0, 2));
        const Vector x = random_state(rng, 2 * ng * nc, 3.0, 0.2);
        const Vector got = rhs_multi_cell(s, MultiCellState::from_flat(x, nc));
        const Vector want = naive_rhs_multi(s, x);
        CHECK(max_abs_diff(got, want) <= 1e-12 * std::max(1.0, norm_inf(want)));
    }
}

TEST_CASE("multi-cell rhs examples") {
    const GrnModel m = chain2();
    const MultiCellSystem two(m.topology(), {m.rates(), m.rates()}, Matrix::from_rows({{0, 1}, {1, 0}}), 0.0);
    const CellState a({0.3, 0.9}, {1.2, 0.4}), b({1.1, 0.2}, {0.6, 2.0});
    const Vector both = rhs_multi_cell(two, MultiCellState({a, b}));
    const Derivative da = rhs_single_cell(m, a), db = rhs_single_cell(m, b);
    Vector want = da.du;
    want.insert(want.end(), da.ds.begin(), da.ds.end());
    want.insert(want.end(), db.du.begin(), db.du.end());
    want.insert(want.end(), db.ds.begin(), db.ds.end());
    CHECK(both == want);

    const MultiCellSystem coupled(m.topology(), {m.rates(), m.rates()}, Matrix::from_rows({{0, 1}, {1, 0}}), 3.0);
    const Vector same = rhs_multi_cell(coupled, MultiCellState({a, a}));
    CHECK(Vector(same.begin(), same.begin() + 4) == Vector(same.begin() + 4, same.end()));
    Vector single = da.du;
    single.insert(single.end(), da.ds.begin(), da.ds.end());
    CHECK(Vector(same.begin(), same.begin() + 4) == single);

    const GrnModel flat(GrnTopology(Matrix(1, 1), Matrix(1, 1), 1.0), RateParams({1}, {0}, {0}));
    const MultiCellSystem pair(flat.topology(), {flat.rates(), flat.rates()}, Matrix::from_rows({{0, 1}, {1, 0}}), 2.0);
    const MultiCellState st({CellState({0}, {1}), CellState({0}, {3})});
    const Vector d = rhs_multi_cell(pair, st);
    CHECK(d[1] == 4.0);
    CHECK(d[3] == -4.0);
    CHECK(velocity(pair, st) == Vector{4.0, -4.0});

    CHECK_THROWS_AS(rhs_multi_cell(pair, MultiCellState({CellState({0}, {1})})), ArgumentError);
}

TEST_CASE("velocity") {
    CHECK(velocity(single_gene(1, 2, 4), CellState({0.5}, {0.25})) == Vector{0.0});
    CHECK(velocity(single_gene(1, 2, 4), CellState({1.0}, {0.0})) == Vector{2.0});
}

TEST_CASE("integrator accuracy") {
    const VectorField decay = [](double, std::span<const double> x, std::span<double> dx) {
        dx[0] = -x[0];
    };
    const Trajectory tr = integrate_field(decay, {1.0}, 1.0, 1e-3);
    CHECK(tr.size() == 1001);
    CHECK(std::abs(tr.states.back()[0] - std::exp(-1.0)) <= 1e-9);
    CHECK(tr.times.front() == 0.0);
    for (std::size_t k = 1; k < tr.size(); ++k)
        CHECK(tr.times[k] - tr.times[k - 1] == doctest::Approx(1e-3).epsilon(1e-9));

    const VectorField zero = [](double, std::span<const double>, std::span<double> dx) {
        for (auto& v : dx) v = 0.0;
    };
    const Trajectory z = integrate_field(zero, {0.4, 2.0}, 1.0, 0.1);
    for (const auto& x : z.states) CHECK(x == Vector{0.4, 2.0});

    CHECK(closed_form_error(1e-3) <= 1e-8);
}

TEST_CASE("fourth-order convergence") {
    const double e1 = closed_form_error(0.1), e2 = closed_form_error(0.05), e3 = closed_form_error(0.025);
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.25));
    CHECK(e2 / e3 == doctest::Approx(16.0).epsilon(0.25));
}

TEST_CASE("integrate argument and divergence errors") {
    const GrnModel m = single_gene(1, 2, 4);
    CHECK_THROWS_AS(integrate(m, CellState({0}, {0}), 1.0, 2.0), ArgumentError);
    CHECK_THROWS_AS(integrate(m, CellState({0}, {0}), 0.0, 0.1), ArgumentError);
    CHECK_THROWS_AS(integrate(m, CellState({0}, {0}), 1.0, 0.0), ArgumentError);
    const VectorField blowup = [](double, std::span<const double> x, std::span<double> dx) {
        dx[0] = x[0] * x[0];
    };
    try {
        integrate_field(blowup, {1.0}, 3.0, 0.01);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
        CHECK(e.step() > 90);
    }
}

TEST_CASE("equilibrium start gives a constant trajectory") {
    const Trajectory tr = integrate(chain2(), CellState({1, 1.5}, {1, 1.5}), 2.0, 0.01);
    for (const auto& x : tr.states) CHECK(x == Vector{1, 1.5, 1, 1.5});
}

TEST_CASE("decoupled systems integrate bit-for-bit like single cells") {
    Rng rng(99);
    for (int k = 0; k < 10; ++k) {
        const std::size_t ng = 1 + rng.index(3), nc = 2 + rng.index(3);
        const MultiCellSystem s = random_system(rng, ng, nc, 0.0);
        const Vector x0 = random_state(rng, 2 * ng * nc, 2.0);
        const Trajectory tm = integrate(s, MultiCellState::from_flat(x0, nc), 3.0, 0.01);
        for (std::size_t i = 0; i < nc; ++i) {
            const Vector xi(x0.begin() + 2 * ng * i, x0.begin() + 2 * ng * (i + 1));
            const Trajectory ti = integrate(s.cell_model(i), CellState::from_flat(xi), 3.0, 0.01);
            bool same = true;
            for (std::size_t t = 0; t < ti.size(); ++t)
                for (std::size_t j = 0; j < 2 * ng; ++j)
                    same = same && ti.states[t][j] == tm.states[t][2 * ng * i + j];
            CHECK(same);
        }
    }
}

TEST_CASE("interventions") {
    const GrnModel m(GrnTopology(Matrix::from_rows({{0, 0, 0}, {1, 0, 0}, {0, 0, 0}}),
                                 Matrix::from_rows({{0, 0, 0}, {0, 0, 0}, {0, 2, 0}}), 1.0),
                     RateParams({1, 1, 1.5}, {1, 1.2, 0.8}, {0.5, 1, 1}));
    const CellState x0({0, 0, 0}, {0, 0, 0});
    const InterventionSchedule sched({{2.0, std::nullopt, 1, RateKind::Alpha, 0.0}});
    const Trajectory base = integrate(m, x0, 6.0, 1e-3);
    const Trajectory hit = integrate(m, x0, 6.0, 1e-3, sched);
    for (std::size_t k = 0; k <= 2000; ++k) CHECK(base.states[k] == hit.states[k]);
    CHECK(base.states[2001] != hit.states[2001]);
    // After the knockout gene 1 drains and gene 0 is untouched.
    CHECK(hit.u(hit.size() - 1, 0, 1) < 0.02);
    CHECK(hit.s(hit.size() - 1, 0, 0) == base.s(base.size() - 1, 0, 0));

    // Off-grid event times snap to the nearest step.
    const InterventionSchedule off({{2.00049, std::nullopt, 1, RateKind::Alpha, 0.0}});
    CHECK(integrate(m, x0, 6.0, 1e-3, off).states == hit.states);

    CHECK_THROWS_AS(InterventionSchedule({{2.0, std::nullopt, 0, RateKind::Alpha, -1.0}}), DomainError);
    CHECK_THROWS_AS(InterventionSchedule({{2.0, std::nullopt, 0, RateKind::Alpha, 0.0},
                                          {1.0, std::nullopt, 0, RateKind::Alpha, 0.0}}),
                    ArgumentError);
    CHECK_THROWS_AS(integrate(m, x0, 1.0, 1e-3, sched), ArgumentError);
    CHECK_THROWS_AS(integrate(m, x0, 6.0, 1e-3, InterventionSchedule({{1.0, std::nullopt, 5, RateKind::Beta, 0.0}})),
                    ArgumentError);
}

TEST_CASE("per-cell interventions touch only their cell") {
    const GrnModel m = chain2();
    const MultiCellSystem s(m.topology(), {m.rates(), m.rates()}, Matrix::from_rows({{0, 1}, {1, 0}}), 0.0);
    const MultiCellState x0({CellState({1, 1.5}, {1, 1.5}), CellState({1, 1.5}, {1, 1.5})});
    const Trajectory tr = integrate(s, x0, 3.0, 0.01, InterventionSchedule({{1.0, 1, 0, RateKind::Gamma, 3.0}}));
    for (const auto& x : tr.states) CHECK(Vector(x.begin(), x.begin() + 4) == Vector{1, 1.5, 1, 1.5});
    CHECK(tr.s(tr.size() - 1, 1, 0) < 0.5);
}

TEST_CASE("integration is deterministic and hashed") {
    Rng rng(4);
    const MultiCellSystem s = random_system(rng, 3, 3, 0.5);
    const Vector x0 = random_state(rng, 18, 2.0);
    const Trajectory a = integrate(s, MultiCellState::from_flat(x0, 3), 2.0, 1e-3);
    const Trajectory b = integrate(s, MultiCellState::from_flat(x0, 3), 2.0, 1e-3);
    CHECK(a.states == b.states);
    CHECK(a.model_hash.size() == 16);
    CHECK(a.model_hash == model_hash(s));
    CHECK(model_hash(s) != model_hash(s.with_rate(0, RateKind::Beta, 0, 9.0)));
    CHECK(a.integrator == "rk4");
    CHECK(a.dt == 1e-3);
}

TEST_CASE("essential nonnegativity") {
    Rng rng(6);
    for (int k = 0; k < 20; ++k) {
        const MultiCellSystem s = random_system(rng, 1 + rng.index(4), 1 + rng.index(4), rng.uniform(0, 2));
        const NonnegativityReport r = check_essential_nonnegativity(s, 1000, 17 + k);
        CHECK(r.passed);
        CHECK(r.trials == 1000);
        CHECK(r.checked_coordinates > 0);
    }
    CHECK_THROWS_AS(check_essential_nonnegativity(random_system(rng, 2, 2, 1.0), 0, 1), ArgumentError);

    const GrnModel m = chain2();
    const Derivative d = rhs_single_cell(m, CellState({0.0, 0.7}, {0.4, 0.9}));
    CHECK(d.du[0] == doctest::Approx(1.0));
    const MultiCellSystem s(m.topology(), {m.rates(), m.rates()}, Matrix::from_rows({{0, 1}, {1, 0}}), 2.0);
    const Vector v = rhs_multi_cell(s, MultiCellState({CellState({0.3, 0.2}, {0.0, 0.5}), CellState({0.1, 0.1}, {0.8, 0.2})}));
    CHECK(v[2] == doctest::Approx(1.0 * 0.3 + 2.0 * 0.8));
}

TEST_CASE("forward invariance of the nonnegative orthant") {
    Rng rng(123);
    double worst = 0.0;
    for (int k = 0; k < 40; ++k) {
        const std::size_t ng = 1 + rng.index(4), nc = 1 + rng.index(3);
        const MultiCellSystem s = random_system(rng, ng, nc, rng.uniform(0, 1), 0.5, 0.5);
        const Vector x0 = random_state(rng, 2 * ng * nc, 2.0, 0.4);
        const Trajectory tr = integrate(s, MultiCellState::from_flat(x0, nc), 20.0, 1e-2);
        for (const auto& x : tr.states) worst = std::min(worst, *std::min_element(x.begin(), x.end()));
    }
    CHECK(worst >= -1e-9);
}

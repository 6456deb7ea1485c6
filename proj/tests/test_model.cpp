#include <doctest.h>

#include <cmath>

#include "grnvelo/errors.hpp"
#include "grnvelo/model.hpp"
#include "support.hpp"

using namespace grnvelo;
using namespace testkit;

namespace {

GrnTopology topo2(std::vector<std::vector<double>> wp, std::vector<std::vector<double>> wm,
                  double kappa = 1.0) {
    return GrnTopology(Matrix::from_rows(wp), Matrix::from_rows(wm), kappa);
}

// Oracle: R_g from the definition.
double naive_regulation(const GrnTopology& t, const Vector& s, std::size_t g) {
    double num = t.kappa(), den = t.kappa();
    for (std::size_t p = 0; p < s.size(); ++p) {
        num += t.w_plus()(g, p) * s[p];
        den += t.w_minus()(g, p) * s[p];
    }
    return num / den;
}

}  // namespace

TEST_CASE("regulation examples") {
    const GrnTopology none = topo2({{0, 0}, {0, 0}}, {{0, 0}, {0, 0}});
    CHECK(regulation(none, Vector{0.3, 7.0}) == Vector{1.0, 1.0});

    const GrnTopology act = topo2({{0, 2}, {0, 0}}, {{0, 0}, {0, 0}});
    CHECK(regulation(act, Vector{0.0, 0.5}) == Vector{2.0, 1.0});

    const GrnTopology rep = topo2({{0, 0}, {0, 0}}, {{0, 2}, {0, 0}});
    CHECK(regulation(rep, Vector{0.0, 0.5}) == Vector{0.5, 1.0});
}

TEST_CASE("regulation rejects bad input") {
    const GrnTopology t = topo2({{0, 1}, {0, 0}}, {{0, 0}, {0, 0}});
    CHECK_THROWS_AS(regulation(t, Vector{1.0}), ArgumentError);
    CHECK_THROWS_AS(regulation(t, Vector{1.0, -0.1}), DomainError);
}

TEST_CASE("topology invariants") {
    CHECK_THROWS_AS(topo2({{0, 1}, {0, 0}}, {{0, 1}, {0, 0}}), DomainError);
    CHECK_THROWS_AS(topo2({{0, -1}, {0, 0}}, {{0, 0}, {0, 0}}), DomainError);
    CHECK_THROWS_AS(topo2({{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}, 0.0), DomainError);
    CHECK_THROWS_AS(topo2({{0, 0}, {0, 0}}, {{0, 0}, {0, 0}}, -1.0), DomainError);
    CHECK_THROWS_AS(GrnTopology(Matrix(2, 3), Matrix(2, 3), 1.0), ArgumentError);
    CHECK_THROWS_AS(RateParams({1.0}, {1.0, 2.0}, {1.0}), ArgumentError);
    CHECK_THROWS_AS(RateParams({1.0}, {-1.0}, {1.0}), DomainError);
    CHECK_THROWS_AS(CellState({-1.0}, {0.0}), DomainError);
    CHECK_THROWS_AS(GrnModel(topo2({{0}}, {{0}}), RateParams({1, 1}, {1, 1}, {1, 1})),
                    ArgumentError);
    CHECK_THROWS_AS(MultiCellSystem(topo2({{0}}, {{0}}), {RateParams({1}, {1}, {1}), RateParams({1}, {1}, {1})},
                                    Matrix::from_rows({{0, 1}, {2, 0}}), 1.0),
                    ArgumentError);
    CHECK_THROWS_AS(MultiCellSystem(topo2({{0}}, {{0}}), {RateParams({1}, {1}, {1})},
                                    Matrix::from_rows({{1}}), 1.0),
                    ArgumentError);
    CHECK_THROWS_AS(MultiCellSystem(topo2({{0}}, {{0}}), {RateParams({1}, {1}, {1})},
                                    Matrix::from_rows({{0}}), -1.0),
                    DomainError);
}

TEST_CASE("flat layouts are cell-major") {
    const MultiCellState st({CellState({1, 2}, {3, 4}), CellState({5, 6}, {7, 8})});
    CHECK(st.flat() == Vector{1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(MultiCellState::from_flat(st.flat(), 2) == st);
    CHECK(u_index(2, 1, 0) == 4);
    CHECK(s_index(2, 1, 1) == 7);
}

TEST_CASE("controlled regulation examples") {
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        const std::size_t n = 1 + rng.index(5);
        const GrnTopology t = random_topology(rng, n, 0.5, 0.4);
        const Vector s = random_state(rng, n, 3.0);
        CHECK(controlled_regulation(t, s, rng.index(n), 1.0) == regulation(t, s));
    }
    const GrnTopology self = topo2({{2}}, {{0}});
    CHECK(controlled_regulation(self, Vector{0.5}, 0, 0.0) == Vector{1.0});
    CHECK(controlled_regulation(self, Vector{0.5}, 0, 1.0) == Vector{2.0});
    CHECK_THROWS_AS(controlled_regulation(self, Vector{0.5}, 0, 1.5), DomainError);
    CHECK_THROWS_AS(controlled_regulation(self, Vector{0.5}, 0, 0.5, {0.6, 1.0}), DomainError);
    CHECK_THROWS_AS(controlled_regulation(self, Vector{0.5}, 1, 0.5), ArgumentError);
}

TEST_CASE("incremental gain examples") {
    const GrnTopology act = topo2({{0, 2}, {0, 0}}, {{0, 0}, {0, 0}});
    CHECK(incremental_gain(act, 0, 1, Vector{0.0, 0.0}, Vector{0.0, 1.0}) == doctest::Approx(2.0));
    const GrnTopology rep = topo2({{0, 0}, {0, 0}}, {{0, 1}, {0, 0}});
    CHECK(incremental_gain(rep, 0, 1, Vector{0.0, 0.0}, Vector{0.0, 1.0}) == doctest::Approx(-0.5));
    CHECK(incremental_gain(act, 1, 0, Vector{0.3, 0.2}, Vector{0.9, 0.2}) == 0.0);
    CHECK_THROWS_AS(incremental_gain(act, 0, 1, Vector{0.0, 1.0}, Vector{0.0, 1.0}), ArgumentError);
    CHECK_THROWS_AS(incremental_gain(act, 0, 1, Vector{0.1, 1.0}, Vector{0.0, 2.0}), ArgumentError);
}

TEST_CASE("incremental gain equals the difference quotient of R") {
    Rng rng(11);
    for (int k = 0; k < 200; ++k) {
        const std::size_t n = 1 + rng.index(4);
        const GrnTopology t = random_topology(rng, n, 0.6, 0.5);
        const std::size_t g = rng.index(n), q = rng.index(n);
        const Vector s = random_state(rng, n, 2.0);
        Vector sh = s;
        sh[q] += rng.uniform(0.1, 1.0);
        const double dq = (naive_regulation(t, s, g) - naive_regulation(t, sh, g)) / (s[q] - sh[q]);
        CHECK(incremental_gain(t, g, q, s, sh) == doctest::Approx(dq).epsilon(1e-12));
    }
}

TEST_CASE("regulation bounds hold on random states") {
    Rng rng(5);
    for (int k = 0; k < 500; ++k) {
        const std::size_t n = 1 + rng.index(6);
        const GrnTopology t = random_topology(rng, n, 0.5, 0.5, 0.1, 3.0, rng.uniform(0.1, 3.0));
        const Vector s = random_state(rng, n, 10.0, 0.2);
        const Vector r = regulation(t, s);
        for (std::size_t g = 0; g < n; ++g) {
            double ws = 0.0;
            for (std::size_t p = 0; p < n; ++p) ws += t.w_plus()(g, p) * s[p];
            CHECK(r[g] > 0.0);
            CHECK(r[g] <= (1.0 + ws / t.kappa()) * (1.0 + 1e-14));
            CHECK(r[g] == doctest::Approx(naive_regulation(t, s, g)).epsilon(1e-14));
        }
    }
}

TEST_CASE("incremental gain converges to the Jacobian entry") {
    Rng rng(8);
    for (int k = 0; k < 100; ++k) {
        const std::size_t n = 2 + rng.index(3);
        const GrnTopology t = random_topology(rng, n, 0.8, 0.5);
        const std::size_t g = rng.index(n), q = rng.index(n);
        const Vector s = random_state(rng, n, 2.0);
        auto gain = [&](double h) {
            Vector sh = s;
            sh[q] += h;
            return incremental_gain(t, g, q, s, sh);
        };
        const double d = regulation_derivative(t, g, q, s);
        const double g3 = gain(1e-3), g5 = gain(1e-5);
        // One-sided quotients are first order: errors shrink ~100x per two decades of h,
        // and the Richardson combination 2 q(h/2) - q(h) is second order.
        CHECK(std::abs(g5 - d) <= std::abs(g3 - d) * 0.02 + 1e-10);
        const double rich = 2.0 * gain(5e-4) - g3;
        CHECK(std::abs(rich - d) <= 1e-5 * std::max(1.0, std::abs(d)));
    }
}

TEST_CASE("sign law of the incremental gain") {
    Rng rng(21);
    int checked = 0;
    while (checked < 1000) {
        const std::size_t n = 1 + rng.index(4);
        const GrnTopology t = random_topology(rng, n, 0.7, 0.5);
        const std::size_t g = rng.index(n), q = rng.index(n);
        const Vector s = random_state(rng, n, 5.0, 0.2);
        Vector sh = s;
        sh[q] = rng.uniform(0.0, 5.0);
        if (sh[q] == s[q]) continue;
        ++checked;
        const double v = incremental_gain(t, g, q, s, sh);
        const int expected = t.w_plus()(g, q) > 0 ? 1 : t.w_minus()(g, q) > 0 ? -1 : 0;
        CHECK((v > 0) - (v < 0) == expected);
    }
}

TEST_CASE("hill functions") {
    for (double n : {0.5, 1.0, 2.0, 4.0}) {
        CHECK(hill_activation(1.7, 1.7, n) == doctest::Approx(0.5));
        CHECK(hill_repression(1.7, 1.7, n) == doctest::Approx(0.5));
    }
    CHECK(hill_activation(0.0, 1.0, 2.0) == 0.0);
    CHECK(hill_repression(0.0, 1.0, 2.0) == 1.0);
    CHECK(hill_activation(3.0, 1.0, 2.0) == doctest::Approx(0.9));
    CHECK(hill_repression(3.0, 1.0, 2.0) == doctest::Approx(0.1));
    Rng rng(2);
    for (int k = 0; k < 100; ++k) {
        const double x = rng.uniform(0, 10), kap = rng.uniform(0.1, 5), n = rng.uniform(0.5, 4);
        CHECK(hill_activation(x, kap, n) + hill_repression(x, kap, n) == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(hill_activation(-1.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(hill_repression(-1.0, 1.0, 1.0), DomainError);
}

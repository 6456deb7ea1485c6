#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grnvelo/dynamics.hpp"
#include "grnvelo/model.hpp"
#include "grnvelo/rng.hpp"

// Hand-rolled generators and independent oracles shared by the test binaries.
namespace testkit {

using grnvelo::CellState;
using grnvelo::GrnModel;
using grnvelo::GrnTopology;
using grnvelo::Matrix;
using grnvelo::MultiCellState;
using grnvelo::MultiCellSystem;
using grnvelo::RateParams;
using grnvelo::Rng;
using grnvelo::Vector;

inline Vector uniform_vector(Rng& rng, std::size_t n, double lo, double hi) {
    Vector v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Each ordered pair gets an edge with probability `density`; the edge is a repressor
// with probability `repress`. Weights are uniform in [lo, hi].
inline GrnTopology random_topology(Rng& rng, std::size_t n, double density, double repress,
                                   double lo = 0.1, double hi = 1.0, double kappa = 1.0) {
    Matrix wp(n, n), wm(n, n);
    for (std::size_t g = 0; g < n; ++g)
        for (std::size_t q = 0; q < n; ++q) {
            if (!rng.bernoulli(density)) continue;
            const double w = rng.uniform(lo, hi);
            if (rng.bernoulli(repress)) wm(g, q) = w;
            else wp(g, q) = w;
        }
    return GrnTopology(wp, wm, kappa);
}

inline RateParams random_rates(Rng& rng, std::size_t n, double lo = 0.5, double hi = 2.0) {
    return RateParams(uniform_vector(rng, n, lo, hi), uniform_vector(rng, n, lo, hi),
                      uniform_vector(rng, n, lo, hi));
}

inline GrnModel random_model(Rng& rng, std::size_t n, double density = 0.4, double repress = 0.4) {
    return GrnModel(random_topology(rng, n, density, repress), random_rates(rng, n));
}

// Random connected graph: a random spanning tree plus extra edges.
inline Matrix random_connected_adjacency(Rng& rng, std::size_t n, double extra = 0.3,
                                         bool weighted = true) {
    Matrix a(n, n);
    auto set = [&](std::size_t i, std::size_t j) {
        const double w = weighted ? rng.uniform(0.5, 1.5) : 1.0;
        a(i, j) = w;
        a(j, i) = w;
    };
    for (std::size_t i = 1; i < n; ++i) set(i, rng.index(i));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (a(i, j) == 0.0 && rng.bernoulli(extra)) set(i, j);
    return a;
}

inline MultiCellSystem random_system(Rng& rng, std::size_t n_genes, std::size_t n_cells,
                                     double coupling, double density = 0.4,
                                     double repress = 0.4) {
    GrnTopology topo = random_topology(rng, n_genes, density, repress);
    std::vector<RateParams> rates;
    for (std::size_t i = 0; i < n_cells; ++i) rates.push_back(random_rates(rng, n_genes));
    return MultiCellSystem(topo, rates, random_connected_adjacency(rng, n_cells), coupling);
}

inline Vector random_state(Rng& rng, std::size_t dim, double hi = 2.0, double zero_prob = 0.0) {
    Vector x(dim);
    for (auto& v : x) v = rng.bernoulli(zero_prob) ? 0.0 : rng.uniform(0.0, hi);
    return x;
}

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

// Oracle: spectral radius by a dense eigensolve.
inline double dense_spectral_radius(const Matrix& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(m), false);
    double r = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        r = std::max(r, std::abs(es.eigenvalues()[i]));
    return r;
}

inline Vector sorted_symmetric_eigenvalues(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m));
    Vector v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return v;
}

// Oracle: single-cell dynamics written straight from the model definition.
inline Vector naive_rhs(const GrnModel& m, const Vector& x, std::size_t q = grnvelo::kNoGene,
                        double z = 1.0) {
    const std::size_t n = m.n_genes();
    const auto& t = m.topology();
    Vector out(2 * n);
    for (std::size_t g = 0; g < n; ++g) {
        double num = t.kappa(), den = t.kappa();
        for (std::size_t p = 0; p < n; ++p) {
            num += (p == q ? z : 1.0) * t.w_plus()(g, p) * x[n + p];
            den += t.w_minus()(g, p) * x[n + p];
        }
        out[g] = m.rates().alpha()[g] * num / den - m.rates().beta()[g] * x[g];
        out[n + g] = m.rates().beta()[g] * x[g] - m.rates().gamma()[g] * x[n + g];
    }
    return out;
}

// Oracle: multi-cell dynamics from the definition (per-cell z multipliers optional).
inline Vector naive_rhs_multi(const MultiCellSystem& sys, const Vector& x,
                              std::size_t q = grnvelo::kNoGene, const Vector& zc = {}) {
    const std::size_t n = sys.n_genes(), nc = sys.n_cells();
    Vector out(x.size());
    for (std::size_t i = 0; i < nc; ++i) {
        const GrnModel m = sys.cell_model(i);
        const Vector xi(x.begin() + 2 * n * i, x.begin() + 2 * n * (i + 1));
        const Vector fi = naive_rhs(m, xi, q, zc.empty() ? 1.0 : zc[i]);
        for (std::size_t k = 0; k < 2 * n; ++k) out[2 * n * i + k] = fi[k];
        for (std::size_t g = 0; g < n; ++g)
            for (std::size_t j = 0; j < nc; ++j)
                out[2 * n * i + n + g] += sys.coupling() * sys.adjacency()(i, j) *
                                          (x[2 * n * j + n + g] - x[2 * n * i + n + g]);
    }
    return out;
}

// Oracle: classical RK4 on a generic field, independent of the library integrator.
template <class F>
Vector rk4(F&& f, Vector x, double T, double dt) {
    const std::size_t steps = static_cast<std::size_t>(std::floor(T / dt + 1e-9));
    for (std::size_t k = 0; k < steps; ++k) {
        const Vector k1 = f(x);
        Vector y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + 0.5 * dt * k1[i];
        const Vector k2 = f(y);
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + 0.5 * dt * k2[i];
        const Vector k3 = f(y);
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + dt * k3[i];
        const Vector k4 = f(y);
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return x;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::filesystem::path temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("grnvelo_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

// Lyapunov-mode models: every W- entry positive (so W+ is zero), rates chosen so that
// the stability inequalities have a chance to hold.
inline GrnModel random_repression_model(Rng& rng, std::size_t n) {
    Matrix wm(n, n);
    for (std::size_t g = 0; g < n; ++g)
        for (std::size_t q = 0; q < n; ++q) wm(g, q) = rng.uniform(0.6, 1.0);
    const double kappa = rng.uniform(1.0, 2.0);
    return GrnModel(GrnTopology(Matrix(n, n), wm, kappa),
                    RateParams(uniform_vector(rng, n, 0.1, 0.5), uniform_vector(rng, n, 2.0, 4.0),
                               uniform_vector(rng, n, 4.0, 8.0)));
}

}  // namespace testkit

#include "grnvelo/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "grnvelo/errors.hpp"
#include "grnvelo/rng.hpp"

namespace grnvelo {

Matrix laplacian(const Matrix& adjacency) {
    if (!adjacency.is_square()) throw ArgumentError("laplacian: adjacency must be square");
    const std::size_t n = adjacency.rows();
    for (std::size_t i = 0; i < n; ++i) {
        if (adjacency(i, i) != 0.0) throw ArgumentError("laplacian: diagonal must be zero");
        for (std::size_t j = 0; j < n; ++j) {
            if (!(adjacency(i, j) >= 0.0)) throw ArgumentError("laplacian: entries must be >= 0");
            if (adjacency(i, j) != adjacency(j, i))
                throw ArgumentError("laplacian: adjacency must be symmetric");
        }
    }
    Matrix L(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            L(i, j) = -adjacency(i, j);
            d += adjacency(i, j);
        }
        L(i, i) = d;
    }
    return L;
}

namespace {

void remove_mean(Vector& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    for (double& v : x) v -= m;
}

}  // namespace

double lambda2(const Matrix& L, Lambda2Options options) {
    if (!L.is_square()) throw ArgumentError("lambda2: matrix must be square");
    const std::size_t n = L.rows();
    if (n < 2) return 0.0;
    double maxdiag = 0.0;
    for (std::size_t i = 0; i < n; ++i) maxdiag = std::max(maxdiag, L(i, i));
    const double sigma = 2.0 * maxdiag + 1.0;

    Rng rng(0x1a2b3c4dULL);
    Vector x(n), y(n);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    remove_mean(x);
    double nx = norm2(x);
    for (auto& v : x) v /= nx;

    double mu_prev = std::numeric_limits<double>::quiet_NaN();
    double delta_prev = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double acc = sigma * x[i];
            const auto row = L.row(i);
            for (std::size_t j = 0; j < n; ++j) acc -= row[j] * x[j];
            y[i] = acc;
        }
        remove_mean(y);
        const double mu = dot(x, y);  // Rayleigh quotient, ||x|| = 1
        const double ny = norm2(y);
        if (ny == 0.0) return std::max(0.0, sigma);
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;

        const double delta = std::abs(mu - mu_prev);
        // Changes at round-off level: the quotient has stopped moving.
        if (delta <= 16.0 * std::numeric_limits<double>::epsilon() * sigma)
            return std::max(0.0, sigma - mu);
        if (std::isfinite(delta_prev) && delta < delta_prev) {
            // Geometric tail estimate of the remaining error.
            const double ratio = delta / delta_prev;
            if (delta * ratio / (1.0 - ratio) <= options.tolerance * sigma * 1e-2)
                return std::max(0.0, sigma - mu);
        }
        mu_prev = mu;
        delta_prev = delta;
    }
    throw NumericError("lambda2: deflated power iteration did not converge");
}

Decomposition decompose(std::span<const double> s_g) {
    Decomposition d;
    if (s_g.empty()) return d;
    double m = 0.0;
    for (double v : s_g) m += v;
    m /= static_cast<double>(s_g.size());
    d.mean_field.assign(s_g.size(), m);
    d.deviation.resize(s_g.size());
    for (std::size_t i = 0; i < s_g.size(); ++i) d.deviation[i] = s_g[i] - m;
    return d;
}

ConsensusReport consensus_bound_check(const MultiCellSystem& system, const Trajectory& trajectory) {
    const std::size_t n = system.n_genes();
    const std::size_t nc = system.n_cells();
    if (trajectory.n_genes != n || trajectory.n_cells != nc)
        throw ArgumentError("trajectory does not match the system dimensions");
    if (trajectory.size() == 0) throw ArgumentError("empty trajectory");

    ConsensusReport rep;
    rep.coupling = system.coupling();
    rep.lambda2 = lambda2(laplacian(system.adjacency()));
    rep.degenerate = !(rep.coupling > 0.0) || !(rep.lambda2 > 0.0);

    const double T = trajectory.times.back();
    const double t_tail = 0.8 * T;
    double slowest = std::numeric_limits<double>::infinity();
    for (const auto& r : system.cell_rates())
        for (std::size_t g = 0; g < n; ++g)
            slowest = std::min({slowest, r.beta()[g], r.gamma()[g]});
    rep.tail_maybe_transient = !(slowest > 0.0) || T < 5.0 / slowest;

    rep.z_m.assign(n, 0.0);
    rep.measured_tail.assign(n, 0.0);
    Vector sg(nc), drive(nc);
    for (std::size_t k = 0; k < trajectory.size(); ++k) {
        for (std::size_t g = 0; g < n; ++g) {
            for (std::size_t i = 0; i < nc; ++i) {
                const auto& r = system.rates(i);
                sg[i] = trajectory.s(k, i, g);
                drive[i] = r.beta()[g] * trajectory.u(k, i, g) - r.gamma()[g] * sg[i];
            }
            rep.z_m[g] = std::max(rep.z_m[g], norm2(drive));
            const Decomposition d = decompose(sg);
            double along = 0.0;
            for (double v : d.deviation) along += v;
            rep.max_orthogonality_error = std::max(
                rep.max_orthogonality_error, std::abs(along) / std::max(norm2(sg), 1e-300));
            if (trajectory.times[k] >= t_tail) {
                const double dev2 = dot(d.deviation, d.deviation);
                rep.measured_tail[g] = std::max(rep.measured_tail[g], dev2);
            }
        }
    }
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < n; ++g) {
        const double b = rep.degenerate ? inf : rep.z_m[g] / (rep.coupling * rep.lambda2);
        const double tb = rep.degenerate ? inf : rep.z_m[g] / (2.0 * rep.coupling * rep.lambda2);
        rep.bound.push_back(b);
        rep.tight_bound.push_back(tb);
        rep.satisfied.push_back(rep.degenerate || rep.measured_tail[g] <= b + 1e-9);
        rep.tight_satisfied.push_back(rep.degenerate || rep.measured_tail[g] <= tb + 1e-9);
    }
    return rep;
}

double alon_boppana(int d) {
    if (d < 2) throw ArgumentError("alon_boppana: degree must be >= 2");
    return std::max(0.0, d - 2.0 * std::sqrt(static_cast<double>(d - 1)));
}

}  // namespace grnvelo

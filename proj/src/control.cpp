#include "grnvelo/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "grnvelo/dynamics.hpp"
#include "grnvelo/errors.hpp"
#include "grnvelo/reachability.hpp"

namespace grnvelo {

ControlProblem::ControlProblem(MultiCellSystem system, bool multi, std::size_t q,
                               ControlBounds bounds, std::vector<ControlTarget> targets,
                               Vector initial, Vector delta)
    : system_(std::move(system)),
      multi_(multi),
      q_(q),
      bounds_(bounds),
      targets_(std::move(targets)),
      initial_(std::move(initial)),
      delta_(std::move(delta)) {
    const std::size_t n = system_.n_genes();
    if (q_ >= n) throw ArgumentError("controlled gene index out of range");
    bounds_.validate();
    if (targets_.empty()) throw ArgumentError("at least one target is required");
    for (std::size_t k = 0; k < targets_.size(); ++k) {
        const auto& t = targets_[k];
        if (t.gene >= n) throw ArgumentError("target " + std::to_string(k) + ": gene out of range");
        if (t.cell >= system_.n_cells())
            throw ArgumentError("target " + std::to_string(k) + ": cell out of range");
        if (!std::isfinite(t.value) || t.value < 0.0)
            throw DomainError("target " + std::to_string(k) + ": value must be >= 0");
        for (std::size_t j = 0; j < k; ++j)
            if (targets_[j].gene == t.gene && targets_[j].cell == t.cell)
                throw ArgumentError("target " + std::to_string(k) + " duplicates target " +
                                    std::to_string(j));
    }
    if (delta_.size() != system_.n_cells())
        throw ArgumentError("delta mask must have one entry per cell");
    vacuous_ = true;
    for (std::size_t g = 0; g < n; ++g)
        if (system_.topology().w_plus()(g, q_) > 0.0) vacuous_ = false;
}

ControlProblem ControlProblem::single(GrnModel model, std::size_t q, ControlBounds bounds,
                                      std::vector<ControlTarget> targets,
                                      const CellState& initial) {
    if (initial.n_genes() != model.n_genes())
        throw ArgumentError("initial state does not match the model");
    for (const auto& t : targets)
        if (t.cell != 0) throw ArgumentError("single-cell targets must use cell 0");
    return ControlProblem(MultiCellSystem::from_model(model), false, q, bounds,
                          std::move(targets), initial.flat(), Vector{1.0});
}

ControlProblem ControlProblem::multi(MultiCellSystem system, std::size_t q, ControlBounds bounds,
                                     std::vector<ControlTarget> targets,
                                     const MultiCellState& initial,
                                     std::vector<bool> delta_mask) {
    if (initial.n_cells() != system.n_cells() || initial.cell(0).n_genes() != system.n_genes())
        throw ArgumentError("initial state does not match the system");
    Vector delta(delta_mask.size());
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = delta_mask[i] ? 1.0 : 0.0;
    return ControlProblem(std::move(system), true, q, bounds, std::move(targets), initial.flat(),
                          std::move(delta));
}

void ControlProblem::effective_control(double z, std::span<double> out) const {
    for (std::size_t i = 0; i < delta_.size(); ++i) out[i] = delta_[i] * z + (1.0 - delta_[i]);
}

double ControlProblem::controlled_level(std::span<const double> x) const {
    const std::size_t n = n_genes();
    double acc = 0.0;
    for (std::size_t i = 0; i < n_cells(); ++i) acc += delta_[i] * x[s_index(n, i, q_)];
    return acc;
}

namespace {

void check_dims(const ControlProblem& p, std::span<const double> x) {
    if (x.size() != p.dim()) throw ArgumentError("state dimension does not match the problem");
}

void check_z(const ControlProblem& p, double z) {
    if (!p.bounds().contains(z)) throw DomainError("control value outside its bounds");
}

// Unchecked kernels shared by the public functions and the sweep.
struct Kernels {
    const ControlProblem& p;
    Vector zeff;

    explicit Kernels(const ControlProblem& problem) : p(problem), zeff(problem.n_cells()) {}

    void rhs(std::span<const double> x, double z, std::span<double> out) {
        p.effective_control(z, zeff);
        rhs_flat(p.system(), x, out, p.controlled_gene(), zeff);
    }

    void costate(std::span<const double> x, std::span<const double> lam, double z,
                 std::span<double> out) {
        p.effective_control(z, zeff);
        const auto& sys = p.system();
        const auto& topo = sys.topology();
        const std::size_t n = sys.n_genes();
        const std::size_t nc = sys.n_cells();
        const std::size_t q = p.controlled_gene();
        const Matrix& wp = topo.w_plus();
        const Matrix& wm = topo.w_minus();
        for (std::size_t i = 0; i < nc; ++i) {
            const auto& r = sys.rates(i);
            const std::size_t base = i * 2 * n;
            const auto s = x.subspan(base + n, n);
            for (std::size_t g = 0; g < n; ++g) {
                double acc = 0.0;
                for (std::size_t h = 0; h < n; ++h) {
                    const double lu = lam[base + h];
                    if (lu == 0.0) continue;
                    const double num = topo.numerator(h, s, q, zeff[i]);
                    const double den = topo.denominator(h, s);
                    const double dn = g == q ? zeff[i] * wp(h, g) : wp(h, g);
                    acc += lu * r.alpha()[h] * (dn * den - num * wm(h, g)) / (den * den);
                }
                out[base + g] = r.beta()[g] * lam[base + g] - r.beta()[g] * lam[base + n + g];
                out[base + n + g] = -acc + r.gamma()[g] * lam[base + n + g];
            }
        }
        const double c = sys.coupling();
        if (c == 0.0 || nc == 1) return;
        const Matrix& A = sys.adjacency();
        for (std::size_t i = 0; i < nc; ++i)
            for (std::size_t g = 0; g < n; ++g) {
                const double li = lam[s_index(n, i, g)];
                double acc = 0.0;
                for (std::size_t j = 0; j < nc; ++j) {
                    const double aij = A(i, j);
                    if (aij != 0.0) acc += aij * (li - lam[s_index(n, j, g)]);
                }
                out[s_index(n, i, g)] += c * acc;
            }
    }

    double psi(std::span<const double> x, std::span<const double> lam) const {
        const auto& sys = p.system();
        const auto& topo = sys.topology();
        const std::size_t n = sys.n_genes();
        const std::size_t q = p.controlled_gene();
        double total = 0.0;
        for (std::size_t i = 0; i < sys.n_cells(); ++i) {
            if (p.delta()[i] == 0.0) continue;
            const auto& r = sys.rates(i);
            const std::size_t base = i * 2 * n;
            const auto s = x.subspan(base + n, n);
            double acc = 0.0;
            for (std::size_t g = 0; g < n; ++g) {
                const double w = topo.w_plus()(g, q);
                if (w == 0.0) continue;
                acc += lam[base + g] * r.alpha()[g] * w / topo.denominator(g, s);
            }
            total += p.multi_cell() ? p.delta()[i] * acc * s[q] : acc;
        }
        return total;
    }
};

}  // namespace

Vector controlled_rhs(const ControlProblem& problem, std::span<const double> x, double z) {
    check_dims(problem, x);
    check_z(problem, z);
    Kernels k(problem);
    Vector out(x.size());
    k.rhs(x, z, out);
    return out;
}

double hamiltonian(const ControlProblem& problem, std::span<const double> x,
                   std::span<const double> lambda, double z) {
    check_dims(problem, x);
    check_dims(problem, lambda);
    Kernels k(problem);
    Vector f(x.size());
    k.rhs(x, z, f);
    return 1.0 + dot(lambda, f);
}

Vector costate_rhs(const ControlProblem& problem, std::span<const double> x,
                   std::span<const double> lambda, double z) {
    check_dims(problem, x);
    check_dims(problem, lambda);
    Kernels k(problem);
    Vector out(x.size());
    k.costate(x, lambda, z, out);
    return out;
}

double switch_function(const ControlProblem& problem, std::span<const double> x,
                       std::span<const double> lambda) {
    check_dims(problem, x);
    check_dims(problem, lambda);
    return Kernels(problem).psi(x, lambda);
}

double bang_bang_update(double psi, double s_q, ControlBounds bounds, double previous_z) {
    if (psi < -kSwitchEpsilon && s_q > 0.0) return bounds.upper;
    if (psi > kSwitchEpsilon && s_q > 0.0) return bounds.lower;
    return previous_z;
}

void FbsmConfig::validate() const {
    if (bins == 0) throw ArgumentError("fbsm: bins must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) throw ArgumentError("fbsm: damping must be in (0, 1]");
    if (!(penalty > 0.0)) throw ArgumentError("fbsm: penalty must be > 0");
    if (!(inner_tolerance > 0.0)) throw ArgumentError("fbsm: inner tolerance must be > 0");
    if (inner_max_sweeps == 0) throw ArgumentError("fbsm: inner max sweeps must be >= 1");
    if (!(target_tolerance > 0.0)) throw ArgumentError("fbsm: target tolerance must be > 0");
    if (!(t_lo > 0.0) || !(t_hi > t_lo) || !std::isfinite(t_hi))
        throw ArgumentError("fbsm: bracket must satisfy 0 < t_lo < t_hi");
    if (outer_max_bisections == 0) throw ArgumentError("fbsm: outer max bisections must be >= 1");
}

bool ControlSolution::hits(double tolerance) const {
    for (double m : terminal_miss)
        if (!(std::abs(m) <= tolerance)) return false;
    return true;
}

namespace {

struct Sweep {
    std::vector<Vector> x;
    std::vector<Vector> lam;
    Vector psi;
    Vector sq;
    Vector H;
    Vector miss;
};

class Sweeper {
public:
    Sweeper(const ControlProblem& p, double T, const FbsmConfig& cfg)
        : p_(p), k_(p), cfg_(cfg), N_(cfg.bins), h_(T / static_cast<double>(cfg.bins)) {
        const std::size_t d = p.dim();
        s_.x.assign(N_ + 1, Vector(d));
        s_.lam.assign(N_ + 1, Vector(d));
        s_.psi.assign(N_, 0.0);
        s_.sq.assign(N_, 0.0);
        s_.H.assign(N_, 0.0);
        s_.miss.assign(p.targets().size(), 0.0);
        k1_.resize(d);
        k2_.resize(d);
        k3_.resize(d);
        k4_.resize(d);
        tmp_.resize(d);
        mid_.resize(d);
        lmid_.resize(d);
    }

    double step() const { return h_; }
    const Sweep& result() const { return s_; }

    void run(const Vector& z) {
        forward(z);
        backward(z);
        diagnostics(z);
    }

private:
    void forward(const Vector& z) {
        const std::size_t d = p_.dim();
        s_.x[0] = p_.initial();
        for (std::size_t k = 0; k < N_; ++k) {
            const Vector& x = s_.x[k];
            Vector& y = s_.x[k + 1];
            k_.rhs(x, z[k], k1_);
            for (std::size_t i = 0; i < d; ++i) tmp_[i] = x[i] + 0.5 * h_ * k1_[i];
            k_.rhs(tmp_, z[k], k2_);
            for (std::size_t i = 0; i < d; ++i) tmp_[i] = x[i] + 0.5 * h_ * k2_[i];
            k_.rhs(tmp_, z[k], k3_);
            for (std::size_t i = 0; i < d; ++i) tmp_[i] = x[i] + h_ * k3_[i];
            k_.rhs(tmp_, z[k], k4_);
            for (std::size_t i = 0; i < d; ++i) {
                y[i] = x[i] + h_ / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
                if (!std::isfinite(y[i]))
                    throw DivergenceError(
                        "non-finite state in forward sweep at step " + std::to_string(k + 1), k + 1);
            }
        }
    }

    void backward(const Vector& z) {
        const std::size_t d = p_.dim();
        const std::size_t n = p_.n_genes();
        Vector& lT = s_.lam[N_];
        std::fill(lT.begin(), lT.end(), 0.0);
        const Vector& xT = s_.x[N_];
        for (std::size_t t = 0; t < p_.targets().size(); ++t) {
            const auto& tg = p_.targets()[t];
            const std::size_t idx = s_index(n, tg.cell, tg.gene);
            s_.miss[t] = xT[idx] - tg.value;
            lT[idx] = cfg_.penalty * s_.miss[t];
        }
        for (std::size_t k = N_; k-- > 0;) {
            const Vector& l = s_.lam[k + 1];
            Vector& out = s_.lam[k];
            const Vector& xa = s_.x[k];
            const Vector& xb = s_.x[k + 1];
            for (std::size_t i = 0; i < d; ++i) mid_[i] = 0.5 * (xa[i] + xb[i]);
            k_.costate(xb, l, z[k], k1_);
            for (std::size_t i = 0; i < d; ++i) tmp_[i] = l[i] - 0.5 * h_ * k1_[i];
            k_.costate(mid_, tmp_, z[k], k2_);
            for (std::size_t i = 0; i < d; ++i) tmp_[i] = l[i] - 0.5 * h_ * k2_[i];
            k_.costate(mid_, tmp_, z[k], k3_);
            for (std::size_t i = 0; i < d; ++i) tmp_[i] = l[i] - h_ * k3_[i];
            k_.costate(xa, tmp_, z[k], k4_);
            for (std::size_t i = 0; i < d; ++i) {
                out[i] = l[i] - h_ / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
                if (!std::isfinite(out[i]))
                    throw DivergenceError(
                        "non-finite costate in backward sweep at step " + std::to_string(k), k);
            }
        }
    }

    void diagnostics(const Vector& z) {
        const std::size_t d = p_.dim();
        for (std::size_t k = 0; k < N_; ++k) {
            for (std::size_t i = 0; i < d; ++i) {
                mid_[i] = 0.5 * (s_.x[k][i] + s_.x[k + 1][i]);
                lmid_[i] = 0.5 * (s_.lam[k][i] + s_.lam[k + 1][i]);
            }
            s_.psi[k] = k_.psi(mid_, lmid_);
            s_.sq[k] = p_.controlled_level(mid_);
            k_.rhs(mid_, z[k], k1_);
            s_.H[k] = 1.0 + dot(lmid_, k1_);
        }
    }

    const ControlProblem& p_;
    Kernels k_;
    const FbsmConfig& cfg_;
    std::size_t N_;
    double h_;
    Sweep s_;
    Vector k1_, k2_, k3_, k4_, tmp_, mid_, lmid_;
};

// Undecided bins inherit the value chosen for the bin before them; the first bin
// keeps its current value.
Vector bang_all(const Sweep& s, const ControlBounds& b, const Vector& z) {
    Vector out(z.size());
    for (std::size_t k = 0; k < z.size(); ++k)
        out[k] = bang_bang_update(s.psi[k], s.sq[k], b, k == 0 ? z[0] : out[k - 1]);
    return out;
}

ControlSolution package(const ControlProblem& p, double T, const Vector& z, const Sweep& s,
                        double h) {
    ControlSolution sol;
    sol.T_star = T;
    const std::size_t N = z.size();
    sol.times.resize(N + 1);
    for (std::size_t k = 0; k <= N; ++k) sol.times[k] = k == N ? T : static_cast<double>(k) * h;
    sol.z = z;
    sol.states = s.x;
    sol.costates = s.lam;
    sol.hamiltonian = s.H;
    sol.psi = s.psi;
    sol.controlled_level = s.sq;
    sol.terminal_miss = s.miss;
    sol.transversality_residual = std::abs(s.H.back());
    (void)p;
    return sol;
}

}  // namespace

ControlSolution fbsm_fixed_time(const ControlProblem& problem, double T, const FbsmConfig& config,
                                FbsmOptions options) {
    config.validate();
    if (!(T > 0.0) || !std::isfinite(T)) throw ArgumentError("fbsm: T must be > 0");
    const auto& b = problem.bounds();
    const double eta = config.damping;
    const double eps = config.target_tolerance;
    const std::size_t nt = problem.targets().size();

    Sweeper sweeper(problem, T, config);
    Vector z(config.bins, b.midpoint());
    Vector miss_lo(nt, std::numeric_limits<double>::infinity());
    Vector miss_hi(nt, -std::numeric_limits<double>::infinity());
    bool converged = false;
    bool bracketed = false;
    std::size_t sweeps = 0;
    double change = 0.0;
    Vector z_next(z.size());

    for (; sweeps < config.inner_max_sweeps;) {
        sweeper.run(z);
        ++sweeps;
        const Sweep& s = sweeper.result();
        bool all = true;
        for (std::size_t t = 0; t < nt; ++t) {
            miss_lo[t] = std::min(miss_lo[t], s.miss[t]);
            miss_hi[t] = std::max(miss_hi[t], s.miss[t]);
            all = all && miss_lo[t] <= eps && miss_hi[t] >= -eps;
        }
        bracketed = all;
        change = 0.0;
        const Vector bang = bang_all(s, b, z);
        for (std::size_t k = 0; k < z.size(); ++k) {
            const double bb = bang[k];
            z_next[k] = eta == 1.0 ? bb : (1.0 - eta) * z[k] + eta * bb;
            change = std::max(change, std::abs(z_next[k] - z[k]));
        }
        if (change <= config.inner_tolerance) {
            converged = true;
            break;
        }
        if (options.stop_on_bracket && bracketed) {
            ControlSolution sol = package(problem, T, z, s, sweeper.step());
            sol.sweeps = sweeps;
            sol.last_change = change;
            sol.bracketed = true;
            return sol;
        }
        z.swap(z_next);
    }

    if (!converged) {
        ControlSolution sol = package(problem, T, z, sweeper.result(), sweeper.step());
        sol.sweeps = sweeps;
        sol.last_change = change;
        sol.bracketed = bracketed;
        return sol;
    }

    // Snap the converged iterate onto the bang-bang law and confirm the switching
    // decisions are self-consistent.
    const Vector z_conv = z_next;
    Vector zp = bang_all(sweeper.result(), b, z_next);
    bool polished = false;
    for (int round = 0; round < 5; ++round) {
        sweeper.run(zp);
        ++sweeps;
        const Vector zb = bang_all(sweeper.result(), b, zp);
        if (zb == zp) {
            polished = true;
            break;
        }
        zp = zb;
    }
    if (!polished) {
        zp = z_conv;
        sweeper.run(zp);
        ++sweeps;
    }
    ControlSolution sol = package(problem, T, zp, sweeper.result(), sweeper.step());
    sol.inner_converged = true;
    sol.polished = polished;
    sol.sweeps = sweeps;
    sol.last_change = change;
    sol.bracketed = bracketed;
    return sol;
}

void check_structural_reachability(const ControlProblem& problem) {
    const auto& sys = problem.system();
    const std::size_t n = sys.n_genes();
    const std::size_t q = problem.controlled_gene();
    const auto reach = genes_influenced_by_control(sys.topology(), q);

    // Cells that feel the control directly or through the spliced coupling.
    const std::size_t nc = sys.n_cells();
    std::vector<bool> cell_reach(nc, false);
    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i < nc; ++i)
        if (problem.delta()[i] != 0.0) {
            cell_reach[i] = true;
            queue.push_back(i);
        }
    if (sys.coupling() > 0.0) {
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const std::size_t i = queue[head];
            for (std::size_t j = 0; j < nc; ++j)
                if (!cell_reach[j] && sys.adjacency()(i, j) > 0.0) {
                    cell_reach[j] = true;
                    queue.push_back(j);
                }
        }
    }
    for (const auto& t : problem.targets()) {
        if (t.gene >= n || !reach[t.gene] || !cell_reach[t.cell]) {
            std::ostringstream os;
            os << "target gene " << t.gene << " (cell " << t.cell
               << ") has no directed path from the controlled gene " << q;
            throw UnreachableError(os.str(), true);
        }
    }
}

ControlSolution solve_min_time(const ControlProblem& problem, const FbsmConfig& config) {
    config.validate();
    check_structural_reachability(problem);
    const double eps = config.target_tolerance;
    std::vector<BisectionProbe> probes;

    auto probe = [&](double T) {
        const ControlSolution s = fbsm_fixed_time(problem, T, config, {.stop_on_bracket = true});
        BisectionProbe pr;
        pr.T = T;
        pr.inner_converged = s.inner_converged;
        pr.bracketed = s.bracketed && !(s.inner_converged && s.hits(eps));
        pr.sufficient = (s.inner_converged && s.hits(eps)) || s.bracketed;
        probes.push_back(pr);
        return pr.sufficient;
    };

    auto finish = [&](double T) {
        ControlSolution sol = fbsm_fixed_time(problem, T, config);
        sol.outer_converged = true;
        sol.probes = probes;
        for (const auto& a : probes)
            for (const auto& b : probes)
                if (a.sufficient && !b.sufficient && a.T < b.T) sol.non_monotone = true;
        return sol;
    };

    if (probe(config.t_lo)) return finish(config.t_lo);
    if (!probe(config.t_hi)) {
        std::ostringstream os;
        os.precision(17);
        os << "targets not attainable within the bracket: T_hi = " << config.t_hi
           << " is insufficient";
        throw UnreachableError(os.str(), false);
    }
    double lo = config.t_lo;
    double hi = config.t_hi;
    for (std::size_t it = 0; it < config.outer_max_bisections; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (probe(mid))
            hi = mid;
        else
            lo = mid;
    }
    return finish(hi);
}

}  // namespace grnvelo

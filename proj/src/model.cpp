#include "grnvelo/model.hpp"

#include <cmath>
#include <string>

#include "grnvelo/errors.hpp"

namespace grnvelo {

namespace {

void check_weights(const Matrix& m, const char* name) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            if (!std::isfinite(v) || v < 0.0) {
                throw DomainError(std::string(name) + "[" + std::to_string(i) + "][" +
                                  std::to_string(j) + "] must be finite and >= 0");
            }
        }
}

void check_rates(const Vector& v, const char* name) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || v[i] < 0.0) {
            throw DomainError(std::string(name) + "[" + std::to_string(i) +
                              "] must be finite and >= 0");
        }
    }
}

}  // namespace

void check_nonnegative(std::span<const double> x, std::size_t expected_size, const char* what) {
    if (x.size() != expected_size) {
        throw ArgumentError(std::string(what) + ": expected length " +
                            std::to_string(expected_size) + ", got " + std::to_string(x.size()));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || x[i] < 0.0) {
            throw DomainError(std::string(what) + "[" + std::to_string(i) +
                              "] must be finite and >= 0");
        }
    }
}

GrnTopology::GrnTopology(Matrix w_plus, Matrix w_minus, double kappa)
    : w_plus_(std::move(w_plus)), w_minus_(std::move(w_minus)), kappa_(kappa) {
    if (!w_plus_.is_square() || w_plus_.rows() == 0)
        throw ArgumentError("W_plus must be a non-empty square matrix");
    if (w_minus_.rows() != w_plus_.rows() || w_minus_.cols() != w_plus_.cols())
        throw ArgumentError("W_minus must have the same shape as W_plus");
    check_weights(w_plus_, "W_plus");
    check_weights(w_minus_, "W_minus");
    for (std::size_t g = 0; g < n_genes(); ++g)
        for (std::size_t q = 0; q < n_genes(); ++q)
            if (w_plus_(g, q) > 0.0 && w_minus_(g, q) > 0.0) {
                throw DomainError("W_plus[" + std::to_string(g) + "][" + std::to_string(q) +
                                  "] and W_minus[" + std::to_string(g) + "][" +
                                  std::to_string(q) + "] are both positive");
            }
    if (!std::isfinite(kappa_) || kappa_ <= 0.0) throw DomainError("kappa must be > 0");
}

bool GrnTopology::has_repressors() const noexcept { return w_minus_.max_entry() > 0.0; }

double GrnTopology::numerator(std::size_t g, std::span<const double> s, std::size_t q,
                              double zq) const {
    double acc = 0.0;
    const auto row = w_plus_.row(g);
    for (std::size_t p = 0; p < row.size(); ++p) {
        const double w = p == q ? zq * row[p] : row[p];
        acc += w * s[p];
    }
    return kappa_ + acc;
}

double GrnTopology::denominator(std::size_t g, std::span<const double> s) const {
    double acc = 0.0;
    const auto row = w_minus_.row(g);
    for (std::size_t p = 0; p < row.size(); ++p) acc += row[p] * s[p];
    return kappa_ + acc;
}

RateParams::RateParams(Vector alpha, Vector beta, Vector gamma)
    : alpha_(std::move(alpha)), beta_(std::move(beta)), gamma_(std::move(gamma)) {
    if (alpha_.empty()) throw ArgumentError("rates must be non-empty");
    if (beta_.size() != alpha_.size() || gamma_.size() != alpha_.size())
        throw ArgumentError("alpha, beta and gamma must have equal length");
    check_rates(alpha_, "alpha");
    check_rates(beta_, "beta");
    check_rates(gamma_, "gamma");
}

const Vector& RateParams::get(RateKind kind) const {
    switch (kind) {
        case RateKind::Alpha: return alpha_;
        case RateKind::Beta: return beta_;
        case RateKind::Gamma: return gamma_;
    }
    throw ArgumentError("unknown rate kind");
}

RateParams RateParams::with_rate(RateKind kind, std::size_t gene, double value) const {
    if (gene >= size()) throw ArgumentError("gene index out of range");
    Vector a = alpha_, b = beta_, c = gamma_;
    switch (kind) {
        case RateKind::Alpha: a[gene] = value; break;
        case RateKind::Beta: b[gene] = value; break;
        case RateKind::Gamma: c[gene] = value; break;
    }
    return RateParams(std::move(a), std::move(b), std::move(c));
}

GrnModel::GrnModel(GrnTopology topology, RateParams rates)
    : topology_(std::move(topology)), rates_(std::move(rates)) {
    if (rates_.size() != topology_.n_genes())
        throw ArgumentError("rate vectors must have length n_genes");
}

CellState::CellState(Vector u, Vector s) : u_(std::move(u)), s_(std::move(s)) {
    check_nonnegative(u_, u_.size(), "u");
    check_nonnegative(s_, u_.size(), "s");
}

CellState CellState::from_flat(std::span<const double> x) {
    if (x.size() % 2 != 0) throw ArgumentError("flat cell state must have even length");
    const std::size_t n = x.size() / 2;
    return CellState(Vector(x.begin(), x.begin() + n), Vector(x.begin() + n, x.end()));
}

Vector CellState::flat() const {
    Vector x(u_);
    x.insert(x.end(), s_.begin(), s_.end());
    return x;
}

MultiCellSystem::MultiCellSystem(GrnTopology topology, std::vector<RateParams> cell_rates,
                                 Matrix adjacency, double coupling)
    : topology_(std::move(topology)),
      cell_rates_(std::move(cell_rates)),
      adjacency_(std::move(adjacency)),
      coupling_(coupling) {
    if (cell_rates_.empty()) throw ArgumentError("at least one cell is required");
    for (const auto& r : cell_rates_)
        if (r.size() != topology_.n_genes())
            throw ArgumentError("cell rate vectors must have length n_genes");
    const std::size_t n = cell_rates_.size();
    if (adjacency_.rows() != n || adjacency_.cols() != n)
        throw ArgumentError("adjacency must be n_cells x n_cells");
    check_weights(adjacency_, "adjacency");
    for (std::size_t i = 0; i < n; ++i) {
        if (adjacency_(i, i) != 0.0) throw ArgumentError("adjacency diagonal must be zero");
        for (std::size_t j = i + 1; j < n; ++j)
            if (adjacency_(i, j) != adjacency_(j, i))
                throw ArgumentError("adjacency must be symmetric (entry " + std::to_string(i) +
                                    "," + std::to_string(j) + ")");
    }
    if (!std::isfinite(coupling_) || coupling_ < 0.0) throw DomainError("coupling must be >= 0");
}

MultiCellSystem MultiCellSystem::from_model(const GrnModel& model) {
    return MultiCellSystem(model.topology(), {model.rates()}, Matrix(1, 1), 0.0);
}

double MultiCellSystem::degree(std::size_t cell) const {
    double d = 0.0;
    for (double a : adjacency_.row(cell)) d += a;
    return d;
}

GrnModel MultiCellSystem::cell_model(std::size_t cell) const {
    return GrnModel(topology_, cell_rates_.at(cell));
}

MultiCellSystem MultiCellSystem::with_rate(std::size_t cell, RateKind kind, std::size_t gene,
                                           double value) const {
    MultiCellSystem out = *this;
    out.cell_rates_.at(cell) = cell_rates_.at(cell).with_rate(kind, gene, value);
    return out;
}

MultiCellState::MultiCellState(std::vector<CellState> cells) : cells_(std::move(cells)) {
    if (cells_.empty()) throw ArgumentError("at least one cell state is required");
    for (const auto& c : cells_)
        if (c.n_genes() != cells_.front().n_genes())
            throw ArgumentError("cell states must have equal gene counts");
}

MultiCellState MultiCellState::from_flat(std::span<const double> x, std::size_t n_cells) {
    if (n_cells == 0 || x.size() % (2 * n_cells) != 0)
        throw ArgumentError("flat state length is not a multiple of 2*n_cells");
    const std::size_t block = x.size() / n_cells;
    std::vector<CellState> cells;
    cells.reserve(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i)
        cells.push_back(CellState::from_flat(x.subspan(i * block, block)));
    return MultiCellState(std::move(cells));
}

Vector MultiCellState::flat() const {
    Vector x;
    for (const auto& c : cells_) {
        x.insert(x.end(), c.u().begin(), c.u().end());
        x.insert(x.end(), c.s().begin(), c.s().end());
    }
    return x;
}

void ControlBounds::validate() const {
    if (!std::isfinite(lower) || !std::isfinite(upper) || lower < 0.0 || upper < lower)
        throw DomainError("control bounds must satisfy 0 <= lower <= upper");
}

Vector regulation(const GrnTopology& topology, std::span<const double> s) {
    check_nonnegative(s, topology.n_genes(), "s");
    Vector r(topology.n_genes());
    for (std::size_t g = 0; g < r.size(); ++g)
        r[g] = topology.numerator(g, s) / topology.denominator(g, s);
    return r;
}

Vector controlled_regulation(const GrnTopology& topology, std::span<const double> s,
                             std::size_t q, double z, ControlBounds bounds) {
    check_nonnegative(s, topology.n_genes(), "s");
    if (q >= topology.n_genes()) throw ArgumentError("controlled gene index out of range");
    bounds.validate();
    if (!bounds.contains(z)) throw DomainError("control value outside its bounds");
    Vector r(topology.n_genes());
    for (std::size_t g = 0; g < r.size(); ++g)
        r[g] = topology.numerator(g, s, q, z) / topology.denominator(g, s);
    return r;
}

double incremental_gain(const GrnTopology& topology, std::size_t g, std::size_t q,
                        std::span<const double> s, std::span<const double> s_hat) {
    const std::size_t n = topology.n_genes();
    check_nonnegative(s, n, "s");
    check_nonnegative(s_hat, n, "s_hat");
    if (g >= n || q >= n) throw ArgumentError("gene index out of range");
    for (std::size_t p = 0; p < n; ++p)
        if (p != q && s[p] != s_hat[p])
            throw ArgumentError("states differ outside coordinate " + std::to_string(q));
    if (s[q] == s_hat[q]) throw ArgumentError("degenerate input: s and s_hat coincide at q");
    const double num = topology.numerator(g, s);
    const double den = topology.denominator(g, s);
    const double den_hat = topology.denominator(g, s_hat);
    return (den * topology.w_plus()(g, q) - num * topology.w_minus()(g, q)) / (den * den_hat);
}

double regulation_derivative(const GrnTopology& topology, std::size_t g, std::size_t h,
                             std::span<const double> s) {
    const double num = topology.numerator(g, s);
    const double den = topology.denominator(g, s);
    return (topology.w_plus()(g, h) * den - num * topology.w_minus()(g, h)) / (den * den);
}

double hill_activation(double x, double kappa, double n) {
    if (!(x >= 0.0)) throw DomainError("hill_activation: x must be >= 0");
    if (!(kappa > 0.0) || !(n > 0.0)) throw DomainError("hill_activation: kappa, n must be > 0");
    const double xn = std::pow(x, n);
    return xn / (std::pow(kappa, n) + xn);
}

double hill_repression(double x, double kappa, double n) {
    if (!(x >= 0.0)) throw DomainError("hill_repression: x must be >= 0");
    if (!(kappa > 0.0) || !(n > 0.0)) throw DomainError("hill_repression: kappa, n must be > 0");
    const double kn = std::pow(kappa, n);
    return kn / (kn + std::pow(x, n));
}

}  // namespace grnvelo

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "grnvelo/matrix.hpp"

namespace grnvelo {

inline constexpr std::size_t kNoGene = std::numeric_limits<std::size_t>::max();

/// Shared regulatory topology: activation weights W+, repression weights W-, and
/// the regulation offset kappa. W+ and W- are nonnegative and never both positive
/// for the same (g, q) pair; kappa is strictly positive.
class GrnTopology {
public:
    GrnTopology(Matrix w_plus, Matrix w_minus, double kappa);

    std::size_t n_genes() const noexcept { return w_plus_.rows(); }
    const Matrix& w_plus() const noexcept { return w_plus_; }
    const Matrix& w_minus() const noexcept { return w_minus_; }
    double kappa() const noexcept { return kappa_; }

    bool has_repressors() const noexcept;
    // q regulates g (either sign).
    bool regulates(std::size_t q, std::size_t g) const {
        return w_plus_(g, q) > 0.0 || w_minus_(g, q) > 0.0;
    }

    // kappa + sum_p W+_{gp} s^p, with column q scaled by zq (q = kNoGene for no scaling).
    // Unchecked: callers validate s.
    double numerator(std::size_t g, std::span<const double> s, std::size_t q = kNoGene,
                     double zq = 1.0) const;
    // kappa + sum_p W-_{gp} s^p.
    double denominator(std::size_t g, std::span<const double> s) const;

    friend bool operator==(const GrnTopology&, const GrnTopology&) = default;

private:
    Matrix w_plus_;
    Matrix w_minus_;
    double kappa_;
};

enum class RateKind { Alpha, Beta, Gamma };

/// Per-gene transcription (alpha), splicing (beta) and degradation (gamma) rates.
/// Entries are finite and nonnegative; operations that divide by beta or gamma
/// check strict positivity themselves.
class RateParams {
public:
    RateParams(Vector alpha, Vector beta, Vector gamma);

    std::size_t size() const noexcept { return alpha_.size(); }
    const Vector& alpha() const noexcept { return alpha_; }
    const Vector& beta() const noexcept { return beta_; }
    const Vector& gamma() const noexcept { return gamma_; }
    const Vector& get(RateKind kind) const;

    RateParams with_rate(RateKind kind, std::size_t gene, double value) const;

    friend bool operator==(const RateParams&, const RateParams&) = default;

private:
    Vector alpha_;
    Vector beta_;
    Vector gamma_;
};

class GrnModel {
public:
    GrnModel(GrnTopology topology, RateParams rates);

    std::size_t n_genes() const noexcept { return topology_.n_genes(); }
    const GrnTopology& topology() const noexcept { return topology_; }
    const RateParams& rates() const noexcept { return rates_; }

    friend bool operator==(const GrnModel&, const GrnModel&) = default;

private:
    GrnTopology topology_;
    RateParams rates_;
};

/// Unspliced (u) and spliced (s) abundances of one cell; nonnegative on construction.
class CellState {
public:
    CellState(Vector u, Vector s);
    // Flat layout [u, s].
    static CellState from_flat(std::span<const double> x);

    std::size_t n_genes() const noexcept { return u_.size(); }
    const Vector& u() const noexcept { return u_; }
    const Vector& s() const noexcept { return s_; }
    Vector flat() const;

    friend bool operator==(const CellState&, const CellState&) = default;

private:
    Vector u_;
    Vector s_;
};

/// n_c cells sharing one topology, with per-cell rates, a symmetric zero-diagonal
/// adjacency A and a coupling constant c >= 0.
class MultiCellSystem {
public:
    MultiCellSystem(GrnTopology topology, std::vector<RateParams> cell_rates, Matrix adjacency,
                    double coupling);
    // One cell, no coupling.
    static MultiCellSystem from_model(const GrnModel& model);

    std::size_t n_cells() const noexcept { return cell_rates_.size(); }
    std::size_t n_genes() const noexcept { return topology_.n_genes(); }
    const GrnTopology& topology() const noexcept { return topology_; }
    const std::vector<RateParams>& cell_rates() const noexcept { return cell_rates_; }
    const RateParams& rates(std::size_t cell) const { return cell_rates_.at(cell); }
    const Matrix& adjacency() const noexcept { return adjacency_; }
    double coupling() const noexcept { return coupling_; }
    double degree(std::size_t cell) const;
    GrnModel cell_model(std::size_t cell) const;

    MultiCellSystem with_rate(std::size_t cell, RateKind kind, std::size_t gene, double value) const;

    friend bool operator==(const MultiCellSystem&, const MultiCellSystem&) = default;

private:
    GrnTopology topology_;
    std::vector<RateParams> cell_rates_;
    Matrix adjacency_;
    double coupling_;
};

/// Per-cell states. Flat layout is cell-major: [u_0, s_0, u_1, s_1, ...].
class MultiCellState {
public:
    explicit MultiCellState(std::vector<CellState> cells);
    static MultiCellState from_flat(std::span<const double> x, std::size_t n_cells);

    std::size_t n_cells() const noexcept { return cells_.size(); }
    const std::vector<CellState>& cells() const noexcept { return cells_; }
    const CellState& cell(std::size_t i) const { return cells_.at(i); }
    Vector flat() const;

    friend bool operator==(const MultiCellState&, const MultiCellState&) = default;

private:
    std::vector<CellState> cells_;
};

// Index helpers for the flat cell-major layout.
inline std::size_t u_index(std::size_t n_genes, std::size_t cell, std::size_t gene) {
    return cell * 2 * n_genes + gene;
}
inline std::size_t s_index(std::size_t n_genes, std::size_t cell, std::size_t gene) {
    return cell * 2 * n_genes + n_genes + gene;
}

struct ControlBounds {
    double lower = 0.0;
    double upper = 1.0;

    void validate() const;
    bool contains(double z) const { return z >= lower && z <= upper; }
    double midpoint() const { return 0.5 * (lower + upper); }

    friend bool operator==(const ControlBounds&, const ControlBounds&) = default;
};

Vector regulation(const GrnTopology& topology, std::span<const double> s);

Vector controlled_regulation(const GrnTopology& topology, std::span<const double> s,
                             std::size_t q, double z, ControlBounds bounds = {});

// (R_g(s) - R_g(s_hat)) / (s^q - s_hat^q) for states differing only in coordinate q.
double incremental_gain(const GrnTopology& topology, std::size_t g, std::size_t q,
                        std::span<const double> s, std::span<const double> s_hat);

// dR_g/ds^h at s.
double regulation_derivative(const GrnTopology& topology, std::size_t g, std::size_t h,
                             std::span<const double> s);

double hill_activation(double x, double kappa, double n);
double hill_repression(double x, double kappa, double n);

// Throws ArgumentError on size mismatch, DomainError on negative or non-finite entries.
void check_nonnegative(std::span<const double> x, std::size_t expected_size, const char* what);

}  // namespace grnvelo

#pragma once

#include <span>
#include <utility>

#include "grnvelo/dynamics.hpp"
#include "grnvelo/model.hpp"

namespace grnvelo {

Matrix laplacian(const Matrix& adjacency);

struct Lambda2Options {
    double tolerance = 1e-10;
    std::size_t max_iterations = 200000;
};

double lambda2(const Matrix& L, Lambda2Options options = {});

struct Decomposition {
    Vector mean_field;
    Vector deviation;
};

Decomposition decompose(std::span<const double> s_g);

struct ConsensusReport {
    double lambda2 = 0.0;
    double coupling = 0.0;
    Vector z_m;            // per gene
    Vector bound;          // z_m / (c lambda2)
    Vector tight_bound;    // z_m / (2 c lambda2), recorded only
    Vector measured_tail;  // max ||s~||^2 over the last 20% of the horizon
    std::vector<bool> satisfied;
    std::vector<bool> tight_satisfied;
    bool degenerate = false;         // c = 0 or disconnected graph
    bool tail_maybe_transient = false;
    double max_orthogonality_error = 0.0;  // max |<s~, 1>| / max(||s||, 1)
};

ConsensusReport consensus_bound_check(const MultiCellSystem& system, const Trajectory& trajectory);

double alon_boppana(int d);

}  // namespace grnvelo

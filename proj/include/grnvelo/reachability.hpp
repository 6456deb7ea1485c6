#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "grnvelo/model.hpp"

namespace grnvelo {

class ControlProblem;

enum class NodeKind { U, S };

struct MolecularEdge {
    std::size_t from = 0;
    std::size_t to = 0;
    int sign = 1;
};

/// Nodes u^0..u^{n-1} (indices 0..n-1) then s^0..s^{n-1} (indices n..2n-1).
class MolecularGraph {
public:
    explicit MolecularGraph(std::size_t n_genes) : n_genes_(n_genes), out_(2 * n_genes) {}

    std::size_t n_genes() const noexcept { return n_genes_; }
    std::size_t n_nodes() const noexcept { return 2 * n_genes_; }
    std::size_t node(NodeKind kind, std::size_t gene) const {
        return kind == NodeKind::U ? gene : n_genes_ + gene;
    }
    const std::vector<MolecularEdge>& edges() const noexcept { return edges_; }
    const std::vector<std::size_t>& successors(std::size_t node) const { return out_.at(node); }
    std::size_t splicing_edge_count() const;
    std::size_t regulation_edge_count() const;

    void add_edge(std::size_t from, std::size_t to, int sign);

private:
    std::size_t n_genes_;
    std::vector<MolecularEdge> edges_;
    std::vector<std::vector<std::size_t>> out_;
};

MolecularGraph molecular_graph(const GrnTopology& topology);

// BFS distances (edge counts) from one node; nullopt where unreachable.
std::vector<std::optional<std::size_t>> distances_from(const MolecularGraph& graph,
                                                       std::size_t node);
std::optional<std::size_t> molecular_distance(const MolecularGraph& graph, std::size_t from_gene,
                                              NodeKind to_kind, std::size_t to_gene);

// Genes r whose s^r is reachable from some u^g with W+_{gq} > 0.
std::vector<bool> genes_influenced_by_control(const GrnTopology& topology, std::size_t q);

// All shortest gene-level paths q -> g, each listed as the gene sequence.
std::vector<std::vector<std::size_t>> shortest_gene_paths(const GrnTopology& topology,
                                                          std::size_t q, std::size_t g);

double csp_sum_product(const GrnModel& model, std::size_t q, std::size_t g,
                       const CellState& state);

enum class CspSign { Positive, Negative, Zero, Mixed };
const char* to_string(CspSign sign);

CspSign csp_sign(const GrnModel& model, std::size_t q, std::size_t g, std::size_t samples,
                 std::uint64_t seed);

using Field = std::function<Vector(std::span<const double>)>;

struct AffineFields {
    Field f;  // drift: dynamics with the controlled column removed
    Field G;  // control direction: G_u^g = alpha^g W+_{gq} s^q / D_g, G_s = 0
};

AffineFields control_affine_fields(const ControlProblem& problem);

inline constexpr double kDefaultBracketStep = 1e-5;

// [v, w](x) = Dw(x) v(x) - Dv(x) w(x), Jacobians by central differences.
Vector lie_bracket(const Field& v, const Field& w, std::span<const double> x,
                   double h = kDefaultBracketStep);

struct BracketProbe {
    int order = 0;
    Vector values;
    double norm = 0.0;  // infinity norm
    Vector u_block;
    Vector s_block;
};

// v_1 = [f, G], v_{k+1} = [f, v_k]. The nested stencil needs every coordinate > order * h.
BracketProbe iterated_bracket(const Field& f, const Field& G, std::span<const double> x, int order,
                              double h = kDefaultBracketStep);

struct InfluenceReport {
    std::optional<int> order;
    std::optional<std::size_t> molecular_distance;
    Vector magnitudes;  // |v_k| at the target, per tested order
    Vector floors;      // noise floor per tested order
    Vector steps;       // finite-difference step per tested order
};

// Step used at bracket order k: the nominal step, widened so nested differences
// stay above round-off.
double influence_step(int order, double h);

InfluenceReport first_influence_order(const ControlProblem& problem, NodeKind target_kind,
                                      std::size_t target_gene, std::span<const double> x,
                                      int max_order, double h = kDefaultBracketStep);

}  // namespace grnvelo

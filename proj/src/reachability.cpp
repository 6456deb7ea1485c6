#include "grnvelo/reachability.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "grnvelo/control.hpp"
#include "grnvelo/errors.hpp"
#include "grnvelo/rng.hpp"

namespace grnvelo {

void MolecularGraph::add_edge(std::size_t from, std::size_t to, int sign) {
    edges_.push_back({from, to, sign});
    out_.at(from).push_back(to);
}

std::size_t MolecularGraph::splicing_edge_count() const {
    return static_cast<std::size_t>(std::count_if(edges_.begin(), edges_.end(), [&](const auto& e) {
        return e.from < n_genes_ && e.to == e.from + n_genes_;
    }));
}

std::size_t MolecularGraph::regulation_edge_count() const {
    return edges_.size() - splicing_edge_count();
}

MolecularGraph molecular_graph(const GrnTopology& topology) {
    const std::size_t n = topology.n_genes();
    MolecularGraph graph(n);
    for (std::size_t g = 0; g < n; ++g) graph.add_edge(g, n + g, 1);
    for (std::size_t q = 0; q < n; ++q)
        for (std::size_t g = 0; g < n; ++g) {
            if (topology.w_plus()(g, q) > 0.0) graph.add_edge(n + q, g, 1);
            else if (topology.w_minus()(g, q) > 0.0) graph.add_edge(n + q, g, -1);
        }
    return graph;
}

std::vector<std::optional<std::size_t>> distances_from(const MolecularGraph& graph,
                                                       std::size_t node) {
    std::vector<std::optional<std::size_t>> dist(graph.n_nodes());
    std::deque<std::size_t> queue{node};
    dist.at(node) = 0;
    while (!queue.empty()) {
        const std::size_t a = queue.front();
        queue.pop_front();
        for (std::size_t b : graph.successors(a)) {
            if (dist[b]) continue;
            dist[b] = *dist[a] + 1;
            queue.push_back(b);
        }
    }
    return dist;
}

std::optional<std::size_t> molecular_distance(const MolecularGraph& graph, std::size_t from_gene,
                                              NodeKind to_kind, std::size_t to_gene) {
    if (from_gene >= graph.n_genes() || to_gene >= graph.n_genes())
        throw ArgumentError("molecular_distance: gene index out of range");
    return distances_from(graph, graph.node(NodeKind::U, from_gene))[graph.node(to_kind, to_gene)];
}

namespace {

std::vector<bool> reachable_nodes(const GrnTopology& topology, std::size_t q) {
    const MolecularGraph graph = molecular_graph(topology);
    std::vector<bool> seen(graph.n_nodes(), false);
    for (std::size_t g = 0; g < topology.n_genes(); ++g) {
        if (!(topology.w_plus()(g, q) > 0.0)) continue;
        const auto d = distances_from(graph, graph.node(NodeKind::U, g));
        for (std::size_t k = 0; k < d.size(); ++k)
            if (d[k]) seen[k] = true;
    }
    return seen;
}

}  // namespace

std::vector<bool> genes_influenced_by_control(const GrnTopology& topology, std::size_t q) {
    if (q >= topology.n_genes()) throw ArgumentError("controlled gene index out of range");
    const auto nodes = reachable_nodes(topology, q);
    const std::size_t n = topology.n_genes();
    std::vector<bool> out(n);
    for (std::size_t r = 0; r < n; ++r) out[r] = nodes[n + r];
    return out;
}

std::vector<std::vector<std::size_t>> shortest_gene_paths(const GrnTopology& topology,
                                                          std::size_t q, std::size_t g) {
    const std::size_t n = topology.n_genes();
    if (q >= n || g >= n) throw ArgumentError("gene index out of range");
    auto edge = [&](std::size_t a, std::size_t b) {
        return topology.w_plus()(b, a) > 0.0 || topology.w_minus()(b, a) > 0.0;
    };
    std::vector<long> dist(n, -1);
    std::deque<std::size_t> queue{q};
    dist[q] = 0;
    while (!queue.empty()) {
        const std::size_t a = queue.front();
        queue.pop_front();
        for (std::size_t b = 0; b < n; ++b)
            if (edge(a, b) && dist[b] < 0) {
                dist[b] = dist[a] + 1;
                queue.push_back(b);
            }
    }
    std::vector<std::vector<std::size_t>> paths;
    if (g == q || dist[g] < 0) return paths;
    // Backtrack through the BFS layers from g to q.
    std::vector<std::size_t> current{g};
    std::function<void(std::size_t)> back = [&](std::size_t node) {
        if (node == q) {
            paths.emplace_back(current.rbegin(), current.rend());
            return;
        }
        for (std::size_t p = 0; p < n; ++p) {
            if (dist[p] >= 0 && dist[p] + 1 == dist[node] && edge(p, node)) {
                current.push_back(p);
                back(p);
                current.pop_back();
            }
        }
    };
    back(g);
    std::sort(paths.begin(), paths.end());
    return paths;
}

double csp_sum_product(const GrnModel& model, std::size_t q, std::size_t g,
                       const CellState& state) {
    if (q == g) throw ArgumentError("csp_sum_product: q and g must differ");
    if (state.n_genes() != model.n_genes())
        throw ArgumentError("csp_sum_product: state does not match the model");
    const auto& topo = model.topology();
    const auto& r = model.rates();
    const auto& s = state.s();
    double total = 0.0;
    for (const auto& path : shortest_gene_paths(topo, q, g)) {
        double prod = 1.0;
        for (std::size_t k = 0; k + 1 < path.size(); ++k) {
            const std::size_t i = path[k];
            const std::size_t j = path[k + 1];
            const double num = topo.numerator(j, s);
            const double den = topo.denominator(j, s);
            prod *= r.beta()[i] * r.alpha()[j] *
                    (topo.w_plus()(j, i) * den - topo.w_minus()(j, i) * num) / (den * den);
        }
        total += prod;
    }
    return total;
}

const char* to_string(CspSign sign) {
    switch (sign) {
        case CspSign::Positive: return "+1";
        case CspSign::Negative: return "-1";
        case CspSign::Zero: return "0";
        case CspSign::Mixed: return "mixed";
    }
    return "mixed";
}

CspSign csp_sign(const GrnModel& model, std::size_t q, std::size_t g, std::size_t samples,
                 std::uint64_t seed) {
    if (samples == 0) throw ArgumentError("csp_sign: samples must be >= 1");
    Rng rng(seed);
    const std::size_t n = model.n_genes();
    bool pos = false, neg = false;
    for (std::size_t k = 0; k < samples; ++k) {
        const double scale = k % 2 == 0 ? 1.0 : 10.0;
        Vector u(n), s(n);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = rng.uniform(0.0, scale);
            s[i] = rng.uniform(0.0, scale);
        }
        const double v = csp_sum_product(model, q, g, CellState(u, s));
        pos = pos || v > 0.0;
        neg = neg || v < 0.0;
    }
    if (pos && neg) return CspSign::Mixed;
    if (pos) return CspSign::Positive;
    if (neg) return CspSign::Negative;
    return CspSign::Zero;
}

AffineFields control_affine_fields(const ControlProblem& problem) {
    if (problem.multi_cell()) throw ArgumentError("control_affine_fields: single-cell problems only");
    const GrnModel model = problem.system().cell_model(0);
    const std::size_t q = problem.controlled_gene();
    AffineFields out;
    out.f = [model, q](std::span<const double> x) {
        const std::size_t n = model.n_genes();
        const auto& topo = model.topology();
        const auto& r = model.rates();
        const auto s = x.subspan(n, n);
        Vector d(2 * n);
        for (std::size_t g = 0; g < n; ++g) {
            d[g] = r.alpha()[g] * (topo.numerator(g, s, q, 0.0) / topo.denominator(g, s)) -
                   r.beta()[g] * x[g];
            d[n + g] = r.beta()[g] * x[g] - r.gamma()[g] * s[g];
        }
        return d;
    };
    out.G = [model, q](std::span<const double> x) {
        const std::size_t n = model.n_genes();
        const auto& topo = model.topology();
        const auto s = x.subspan(n, n);
        Vector d(2 * n, 0.0);
        for (std::size_t g = 0; g < n; ++g) {
            const double w = topo.w_plus()(g, q);
            if (w != 0.0) d[g] = model.rates().alpha()[g] * w * s[q] / topo.denominator(g, s);
        }
        return d;
    };
    return out;
}

Vector lie_bracket(const Field& v, const Field& w, std::span<const double> x, double h) {
    if (!(h > 0.0)) throw ArgumentError("lie_bracket: step must be > 0");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > h))
            throw DomainError("lie_bracket: coordinate " + std::to_string(i) +
                              " too close to the boundary for the stencil");
    const std::size_t n = x.size();
    const Vector vx = v(x);
    const Vector wx = w(x);
    Vector out(n, 0.0);
    Vector xp(x.begin(), x.end()), xm(x.begin(), x.end());
    for (std::size_t j = 0; j < n; ++j) {
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        const Vector wp = w(xp), wm = w(xm);
        const Vector vp = v(xp), vm = v(xm);
        for (std::size_t i = 0; i < n; ++i) {
            const double dw = (wp[i] - wm[i]) / (2.0 * h);
            const double dv = (vp[i] - vm[i]) / (2.0 * h);
            out[i] += dw * vx[j] - dv * wx[j];
        }
        xp[j] = x[j];
        xm[j] = x[j];
    }
    return out;
}

BracketProbe iterated_bracket(const Field& f, const Field& G, std::span<const double> x, int order,
                              double h) {
    if (order < 1) throw ArgumentError("iterated_bracket: order must be >= 1");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > static_cast<double>(order) * h))
            throw DomainError("iterated_bracket: coordinate " + std::to_string(i) +
                              " too close to the boundary for the nested stencil");
    Field v = [f, G, h](std::span<const double> y) { return lie_bracket(f, G, y, h); };
    for (int k = 1; k < order; ++k) {
        v = [f, prev = v, h](std::span<const double> y) { return lie_bracket(f, prev, y, h); };
    }
    BracketProbe probe;
    probe.order = order;
    probe.values = v(x);
    probe.norm = norm_inf(probe.values);
    const std::size_t n = x.size() / 2;
    probe.u_block.assign(probe.values.begin(), probe.values.begin() + n);
    probe.s_block.assign(probe.values.begin() + n, probe.values.end());
    return probe;
}

double influence_step(int order, double h) {
    return std::max(h, std::pow(10.0, -16.0 / (order + 2)));
}

InfluenceReport first_influence_order(const ControlProblem& problem, NodeKind target_kind,
                                      std::size_t target_gene, std::span<const double> x,
                                      int max_order, double h) {
    if (max_order < 1 || max_order > 6)
        throw ArgumentError("first_influence_order: max_order must be in [1, 6]");
    const auto& topo = problem.system().topology();
    const std::size_t n = topo.n_genes();
    if (target_gene >= n) throw ArgumentError("target gene out of range");
    if (x.size() != 2 * n) throw ArgumentError("state dimension does not match the problem");

    const MolecularGraph graph = molecular_graph(topo);
    const std::size_t target = graph.node(target_kind, target_gene);
    const auto reach = reachable_nodes(topo, problem.controlled_gene());
    const AffineFields fields = control_affine_fields(problem);

    InfluenceReport rep;
    rep.molecular_distance =
        molecular_distance(graph, problem.controlled_gene(), target_kind, target_gene);
    for (int k = 1; k <= max_order; ++k) {
        const double hk = influence_step(k, h);
        const BracketProbe probe = iterated_bracket(fields.f, fields.G, x, k, hk);
        double unreachable = 0.0;
        for (std::size_t i = 0; i < probe.values.size(); ++i)
            if (!reach[i] && i != target) unreachable = std::max(unreachable, std::abs(probe.values[i]));
        const double floor = std::max(10.0 * unreachable, 1e-4 * probe.norm);
        const double mag = std::abs(probe.values[target]);
        rep.magnitudes.push_back(mag);
        rep.floors.push_back(floor);
        rep.steps.push_back(hk);
        if (mag > floor) {
            rep.order = k;
            break;
        }
    }
    return rep;
}

}  // namespace grnvelo

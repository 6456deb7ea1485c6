#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "grnvelo/errors.hpp"
#include "grnvelo/scenario.hpp"

namespace grnvelo {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
    throw ConfigError(exit_code::schema, path, msg);
}

[[noreturn]] void invariant_error(const std::string& path, const std::string& msg) {
    throw ConfigError(exit_code::invariant, path, msg);
}

std::string key_path(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::string index_path(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) schema_error(path, "expected an object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key())) schema_error(key_path(path, item.key()), "unknown key");
}

const json* find(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    const json* v = find(obj, key);
    if (!v) schema_error(key_path(path, key), "required key is missing");
    return *v;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) schema_error(path, "expected a number");
    return j.get<double>();
}

double number_or(const json& obj, const std::string& key, const std::string& path, double def) {
    const json* v = find(obj, key);
    return v ? as_number(*v, key_path(path, key)) : def;
}

std::uint64_t as_unsigned(const json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer()) {
        if (j.get<std::int64_t>() < 0) schema_error(path, "expected a nonnegative integer");
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    }
    schema_error(path, "expected a nonnegative integer");
}

std::uint64_t unsigned_or(const json& obj, const std::string& key, const std::string& path,
                          std::uint64_t def) {
    const json* v = find(obj, key);
    return v ? as_unsigned(*v, key_path(path, key)) : def;
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) schema_error(path, "expected a string");
    return j.get<std::string>();
}

std::string string_or(const json& obj, const std::string& key, const std::string& path,
                      const std::string& def) {
    const json* v = find(obj, key);
    return v ? as_string(*v, key_path(path, key)) : def;
}

Vector as_vector(const json& j, const std::string& path) {
    if (!j.is_array()) schema_error(path, "expected an array of numbers");
    Vector v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(as_number(j[i], index_path(path, i)));
    return v;
}

Rows as_rows(const json& j, const std::string& path) {
    if (!j.is_array()) schema_error(path, "expected an array of rows");
    Rows r;
    for (std::size_t i = 0; i < j.size(); ++i) r.push_back(as_vector(j[i], index_path(path, i)));
    return r;
}

RatesConfig parse_rates(const json& j, const std::string& path) {
    check_keys(j, path, {"alpha", "beta", "gamma"});
    RatesConfig r;
    r.alpha = as_vector(require(j, "alpha", path), key_path(path, "alpha"));
    r.beta = as_vector(require(j, "beta", path), key_path(path, "beta"));
    r.gamma = as_vector(require(j, "gamma", path), key_path(path, "gamma"));
    return r;
}

StateConfig parse_state(const json& j, const std::string& path) {
    check_keys(j, path, {"u", "s"});
    StateConfig s;
    s.u = as_vector(require(j, "u", path), key_path(path, "u"));
    s.s = as_vector(require(j, "s", path), key_path(path, "s"));
    return s;
}

ModelConfig parse_model(const json& j, const std::string& path) {
    check_keys(j, path, {"kappa", "w_plus", "w_minus", "rates", "cells"});
    ModelConfig m;
    m.kappa = number_or(j, "kappa", path, 1.0);
    m.w_plus = as_rows(require(j, "w_plus", path), key_path(path, "w_plus"));
    if (const json* wm = find(j, "w_minus")) {
        m.w_minus = as_rows(*wm, key_path(path, "w_minus"));
    } else {
        m.w_minus.assign(m.w_plus.size(), std::vector<double>(m.w_plus.size(), 0.0));
    }
    m.rates = parse_rates(require(j, "rates", path), key_path(path, "rates"));
    if (const json* c = find(j, "cells")) {
        const std::string cp = key_path(path, "cells");
        check_keys(*c, cp, {"adjacency", "coupling", "rates", "regular_degree"});
        CellsConfig cells;
        cells.adjacency = as_rows(require(*c, "adjacency", cp), key_path(cp, "adjacency"));
        cells.coupling = number_or(*c, "coupling", cp, 0.0);
        if (const json* r = find(*c, "rates")) {
            const std::string rp = key_path(cp, "rates");
            if (!r->is_array()) schema_error(rp, "expected an array of rate blocks");
            for (std::size_t i = 0; i < r->size(); ++i)
                cells.rates.push_back(parse_rates((*r)[i], index_path(rp, i)));
        } else {
            cells.rates.assign(cells.adjacency.size(), m.rates);
        }
        if (const json* d = find(*c, "regular_degree")) {
            cells.regular_degree =
                static_cast<int>(as_unsigned(*d, key_path(cp, "regular_degree")));
        }
        m.cells = std::move(cells);
    }
    return m;
}

InitialConfig parse_initial(const json& j, const std::string& path) {
    InitialConfig init;
    if (j.is_object() && j.contains("cells")) {
        check_keys(j, path, {"cells"});
        const std::string cp = key_path(path, "cells");
        const json& cells = j["cells"];
        if (!cells.is_array()) schema_error(cp, "expected an array of states");
        for (std::size_t i = 0; i < cells.size(); ++i)
            init.states.push_back(parse_state(cells[i], index_path(cp, i)));
        init.per_cell = true;
    } else {
        init.states.push_back(parse_state(j, path));
    }
    return init;
}

RateKind parse_rate_kind(const std::string& s, const std::string& path) {
    if (s == "alpha") return RateKind::Alpha;
    if (s == "beta") return RateKind::Beta;
    if (s == "gamma") return RateKind::Gamma;
    schema_error(path, "expected one of alpha, beta, gamma");
}

SimulateConfig parse_simulate(const json& j, const std::string& path) {
    check_keys(j, path, {"horizon", "dt", "interventions", "output_stride"});
    SimulateConfig s;
    s.horizon = as_number(require(j, "horizon", path), key_path(path, "horizon"));
    s.dt = number_or(j, "dt", path, 1e-3);
    s.output_stride = unsigned_or(j, "output_stride", path, 1);
    if (const json* ev = find(j, "interventions")) {
        const std::string ip = key_path(path, "interventions");
        if (!ev->is_array()) schema_error(ip, "expected an array of events");
        for (std::size_t k = 0; k < ev->size(); ++k) {
            const std::string ep = index_path(ip, k);
            const json& e = (*ev)[k];
            check_keys(e, ep, {"time", "cell", "gene", "parameter", "value"});
            InterventionConfig ic;
            ic.time = as_number(require(e, "time", ep), key_path(ep, "time"));
            if (const json* c = find(e, "cell")) ic.cell = as_unsigned(*c, key_path(ep, "cell"));
            ic.gene = as_unsigned(require(e, "gene", ep), key_path(ep, "gene"));
            ic.parameter = as_string(require(e, "parameter", ep), key_path(ep, "parameter"));
            parse_rate_kind(ic.parameter, key_path(ep, "parameter"));
            ic.value = as_number(require(e, "value", ep), key_path(ep, "value"));
            s.interventions.push_back(ic);
        }
    }
    return s;
}

EquilibriumConfig parse_equilibrium(const json& j, const std::string& path) {
    check_keys(j, path, {"tolerance", "max_iterations"});
    EquilibriumConfig e;
    e.tolerance = number_or(j, "tolerance", path, 1e-12);
    e.max_iterations = unsigned_or(j, "max_iterations", path, 100000);
    return e;
}

StabilityConfig parse_stability(const json& j, const std::string& path) {
    check_keys(j, path, {"mode", "horizon", "dt", "output_stride"});
    StabilityConfig s;
    s.mode = string_or(j, "mode", path, "auto");
    if (s.mode != "auto" && s.mode != "linear" && s.mode != "lyapunov")
        schema_error(key_path(path, "mode"), "expected one of auto, linear, lyapunov");
    s.horizon = number_or(j, "horizon", path, 0.0);
    s.dt = number_or(j, "dt", path, 1e-3);
    s.output_stride = unsigned_or(j, "output_stride", path, 1);
    return s;
}

ConsensusConfig parse_consensus(const json& j, const std::string& path) {
    check_keys(j, path, {"horizon", "dt", "output_stride"});
    ConsensusConfig c;
    c.horizon = as_number(require(j, "horizon", path), key_path(path, "horizon"));
    c.dt = number_or(j, "dt", path, 1e-3);
    c.output_stride = unsigned_or(j, "output_stride", path, 1);
    return c;
}

FbsmConfig parse_fbsm(const json& j, const std::string& path) {
    check_keys(j, path,
               {"bins", "damping", "penalty", "inner_tolerance", "inner_max_sweeps",
                "target_tolerance", "t_lo", "t_hi", "outer_max_bisections"});
    FbsmConfig f;
    f.bins = unsigned_or(j, "bins", path, f.bins);
    f.damping = number_or(j, "damping", path, f.damping);
    f.penalty = number_or(j, "penalty", path, f.penalty);
    f.inner_tolerance = number_or(j, "inner_tolerance", path, f.inner_tolerance);
    f.inner_max_sweeps = unsigned_or(j, "inner_max_sweeps", path, f.inner_max_sweeps);
    f.target_tolerance = number_or(j, "target_tolerance", path, f.target_tolerance);
    f.t_lo = number_or(j, "t_lo", path, f.t_lo);
    f.t_hi = number_or(j, "t_hi", path, f.t_hi);
    f.outer_max_bisections = unsigned_or(j, "outer_max_bisections", path, f.outer_max_bisections);
    return f;
}

ControlConfig parse_control(const json& j, const std::string& path) {
    check_keys(j, path,
               {"gene", "bounds", "targets", "delta", "delta_probability", "mode", "horizon",
                "fbsm", "output_stride"});
    ControlConfig c;
    c.gene = as_unsigned(require(j, "gene", path), key_path(path, "gene"));
    if (const json* b = find(j, "bounds")) {
        const Vector v = as_vector(*b, key_path(path, "bounds"));
        if (v.size() != 2) schema_error(key_path(path, "bounds"), "expected [lower, upper]");
        c.lower = v[0];
        c.upper = v[1];
    }
    const std::string tp = key_path(path, "targets");
    const json& targets = require(j, "targets", path);
    if (!targets.is_array()) schema_error(tp, "expected an array of targets");
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const std::string ep = index_path(tp, k);
        check_keys(targets[k], ep, {"gene", "cell", "value"});
        TargetConfig t;
        t.gene = as_unsigned(require(targets[k], "gene", ep), key_path(ep, "gene"));
        t.cell = unsigned_or(targets[k], "cell", ep, 0);
        t.value = as_number(require(targets[k], "value", ep), key_path(ep, "value"));
        c.targets.push_back(t);
    }
    if (const json* d = find(j, "delta")) {
        const std::string dp = key_path(path, "delta");
        if (!d->is_array()) schema_error(dp, "expected an array of booleans");
        std::vector<bool> mask;
        for (std::size_t i = 0; i < d->size(); ++i) {
            if (!(*d)[i].is_boolean()) schema_error(index_path(dp, i), "expected a boolean");
            mask.push_back((*d)[i].get<bool>());
        }
        c.delta = std::move(mask);
    }
    if (const json* p = find(j, "delta_probability"))
        c.delta_probability = as_number(*p, key_path(path, "delta_probability"));
    c.mode = string_or(j, "mode", path, "min_time");
    if (c.mode != "min_time" && c.mode != "fixed_time")
        schema_error(key_path(path, "mode"), "expected min_time or fixed_time");
    c.horizon = number_or(j, "horizon", path, 0.0);
    if (const json* f = find(j, "fbsm")) c.fbsm = parse_fbsm(*f, key_path(path, "fbsm"));
    c.output_stride = unsigned_or(j, "output_stride", path, 1);
    return c;
}

ReachabilityConfig parse_reachability(const json& j, const std::string& path) {
    check_keys(j, path, {"gene", "max_order", "step", "csp_samples", "state"});
    ReachabilityConfig r;
    r.gene = as_unsigned(require(j, "gene", path), key_path(path, "gene"));
    r.max_order = static_cast<int>(unsigned_or(j, "max_order", path, 4));
    r.step = number_or(j, "step", path, 1e-5);
    r.csp_samples = unsigned_or(j, "csp_samples", path, 200);
    if (const json* s = find(j, "state")) r.state = parse_state(*s, key_path(path, "state"));
    return r;
}

// ---- invariant validation ----

void check_finite_nonneg(double v, const std::string& path) {
    if (!std::isfinite(v) || v < 0.0) invariant_error(path, "must be finite and >= 0");
}

void check_positive(double v, const std::string& path) {
    if (!std::isfinite(v) || !(v > 0.0)) invariant_error(path, "must be finite and > 0");
}

void check_square(const Rows& r, std::size_t n, const std::string& path) {
    if (r.size() != n) invariant_error(path, "expected " + std::to_string(n) + " rows");
    for (std::size_t i = 0; i < n; ++i) {
        if (r[i].size() != n)
            invariant_error(index_path(path, i), "expected " + std::to_string(n) + " columns");
        for (std::size_t j = 0; j < n; ++j)
            check_finite_nonneg(r[i][j], index_path(index_path(path, i), j));
    }
}

void check_rates(const RatesConfig& r, std::size_t n, const std::string& path) {
    const std::pair<const Vector*, const char*> parts[] = {
        {&r.alpha, "alpha"}, {&r.beta, "beta"}, {&r.gamma, "gamma"}};
    for (const auto& [v, name] : parts) {
        const std::string p = key_path(path, name);
        if (v->size() != n) invariant_error(p, "expected length " + std::to_string(n));
        for (std::size_t i = 0; i < n; ++i) check_finite_nonneg((*v)[i], index_path(p, i));
    }
}

void check_state(const StateConfig& s, std::size_t n, const std::string& path) {
    const std::pair<const Vector*, const char*> parts[] = {{&s.u, "u"}, {&s.s, "s"}};
    for (const auto& [v, name] : parts) {
        const std::string p = key_path(path, name);
        if (v->size() != n) invariant_error(p, "expected length " + std::to_string(n));
        for (std::size_t i = 0; i < n; ++i) check_finite_nonneg((*v)[i], index_path(p, i));
    }
}

void check_index(std::size_t v, std::size_t n, const std::string& path) {
    if (v >= n) invariant_error(path, "index out of range (must be < " + std::to_string(n) + ")");
}

void validate(ScenarioConfig& c) {
    static const std::set<std::string> kinds = {"simulate", "equilibrium", "stability",
                                                "consensus", "control", "reachability"};
    if (!kinds.count(c.kind))
        schema_error("kind",
                     "expected one of simulate, equilibrium, stability, consensus, control, "
                     "reachability");

    auto& m = c.model;
    check_positive(m.kappa, "model.kappa");
    const std::size_t n = m.w_plus.size();
    if (n == 0) invariant_error("model.w_plus", "must have at least one gene");
    check_square(m.w_plus, n, "model.w_plus");
    check_square(m.w_minus, n, "model.w_minus");
    for (std::size_t g = 0; g < n; ++g)
        for (std::size_t q = 0; q < n; ++q)
            if (m.w_plus[g][q] > 0.0 && m.w_minus[g][q] > 0.0)
                invariant_error("model.w_plus[" + std::to_string(g) + "][" + std::to_string(q) + "]",
                                "activation and repression both positive (model.w_minus[" +
                                    std::to_string(g) + "][" + std::to_string(q) + "])");
    check_rates(m.rates, n, "model.rates");
    std::size_t nc = 1;
    if (m.cells) {
        auto& cells = *m.cells;
        nc = cells.adjacency.size();
        if (nc == 0) invariant_error("model.cells.adjacency", "must have at least one cell");
        check_square(cells.adjacency, nc, "model.cells.adjacency");
        for (std::size_t i = 0; i < nc; ++i) {
            if (cells.adjacency[i][i] != 0.0)
                invariant_error("model.cells.adjacency[" + std::to_string(i) + "][" +
                                    std::to_string(i) + "]",
                                "diagonal must be zero");
            for (std::size_t j = i + 1; j < nc; ++j)
                if (cells.adjacency[i][j] != cells.adjacency[j][i])
                    invariant_error("model.cells.adjacency[" + std::to_string(i) + "][" +
                                        std::to_string(j) + "]",
                                    "adjacency must be symmetric");
        }
        check_finite_nonneg(cells.coupling, "model.cells.coupling");
        if (cells.rates.size() != nc)
            invariant_error("model.cells.rates", "expected one rate block per cell");
        for (std::size_t i = 0; i < nc; ++i)
            check_rates(cells.rates[i], n, index_path("model.cells.rates", i));
        if (cells.regular_degree && *cells.regular_degree < 2)
            invariant_error("model.cells.regular_degree", "must be >= 2");
    }
    const bool multi = m.cells.has_value();

    if (c.initial) {
        if (c.initial->per_cell) {
            if (c.initial->states.size() != nc)
                invariant_error("initial.cells", "expected one state per cell");
            for (std::size_t i = 0; i < nc; ++i)
                check_state(c.initial->states[i], n, index_path("initial.cells", i));
        } else {
            check_state(c.initial->states[0], n, "initial");
        }
    }

    auto require_block = [&](bool present, const char* name) {
        if (!present) schema_error(name, "required for kind '" + c.kind + "'");
    };
    auto forbid_block = [&](bool present, const char* name) {
        if (present) schema_error(name, "not valid for kind '" + c.kind + "'");
    };
    auto require_initial = [&]() {
        if (!c.initial) schema_error("initial", "required for kind '" + c.kind + "'");
    };
    auto check_horizon = [&](double horizon, double dt, std::size_t stride, const std::string& p) {
        check_positive(horizon, key_path(p, "horizon"));
        check_positive(dt, key_path(p, "dt"));
        if (dt > horizon) invariant_error(key_path(p, "dt"), "must not exceed the horizon");
        if (stride == 0) invariant_error(key_path(p, "output_stride"), "must be >= 1");
    };

    forbid_block(c.simulate && c.kind != "simulate", "simulate");
    forbid_block(c.equilibrium && c.kind != "equilibrium" && c.kind != "stability", "equilibrium");
    forbid_block(c.stability && c.kind != "stability", "stability");
    forbid_block(c.consensus && c.kind != "consensus", "consensus");
    forbid_block(c.control && c.kind != "control", "control");
    forbid_block(c.reachability && c.kind != "reachability", "reachability");

    if (c.kind == "simulate") {
        require_block(c.simulate.has_value(), "simulate");
        require_initial();
        const auto& s = *c.simulate;
        check_horizon(s.horizon, s.dt, s.output_stride, "simulate");
        for (std::size_t k = 0; k < s.interventions.size(); ++k) {
            const auto& e = s.interventions[k];
            const std::string ep = index_path("simulate.interventions", k);
            check_finite_nonneg(e.time, key_path(ep, "time"));
            if (e.time > s.horizon) invariant_error(key_path(ep, "time"), "exceeds the horizon");
            if (k > 0 && e.time < s.interventions[k - 1].time)
                invariant_error(key_path(ep, "time"), "events must be sorted by time");
            if (e.cell) check_index(*e.cell, nc, key_path(ep, "cell"));
            check_index(e.gene, n, key_path(ep, "gene"));
            check_finite_nonneg(e.value, key_path(ep, "value"));
        }
    } else if (c.kind == "equilibrium") {
        if (!c.equilibrium) c.equilibrium = EquilibriumConfig{};
    } else if (c.kind == "stability") {
        if (!c.equilibrium) c.equilibrium = EquilibriumConfig{};
        if (!c.stability) c.stability = StabilityConfig{};
        const auto& s = *c.stability;
        if (s.horizon != 0.0) {
            require_initial();
            check_horizon(s.horizon, s.dt, s.output_stride, "stability");
        }
    } else if (c.kind == "consensus") {
        require_block(c.consensus.has_value(), "consensus");
        require_initial();
        if (!multi) schema_error("model.cells", "required for kind 'consensus'");
        const auto& s = *c.consensus;
        check_horizon(s.horizon, s.dt, s.output_stride, "consensus");
    } else if (c.kind == "control") {
        require_block(c.control.has_value(), "control");
        require_initial();
        auto& k = *c.control;
        check_index(k.gene, n, "control.gene");
        if (!std::isfinite(k.lower) || !std::isfinite(k.upper) || k.lower < 0.0 ||
            k.upper < k.lower)
            invariant_error("control.bounds", "must satisfy 0 <= lower <= upper");
        if (k.targets.empty()) invariant_error("control.targets", "at least one target is required");
        for (std::size_t t = 0; t < k.targets.size(); ++t) {
            const std::string tp = index_path("control.targets", t);
            check_index(k.targets[t].gene, n, key_path(tp, "gene"));
            check_index(k.targets[t].cell, nc, key_path(tp, "cell"));
            check_finite_nonneg(k.targets[t].value, key_path(tp, "value"));
            for (std::size_t s = 0; s < t; ++s)
                if (k.targets[s].gene == k.targets[t].gene && k.targets[s].cell == k.targets[t].cell)
                    invariant_error(tp, "duplicates " + index_path("control.targets", s));
        }
        if (!multi && (k.delta || k.delta_probability))
            invariant_error("control.delta", "only valid for multi-cell models");
        if (k.delta && k.delta_probability)
            invariant_error("control.delta_probability", "give either delta or delta_probability");
        if (k.delta && k.delta->size() != nc)
            invariant_error("control.delta", "expected one flag per cell");
        if (k.delta_probability &&
            !(*k.delta_probability >= 0.0 && *k.delta_probability <= 1.0))
            invariant_error("control.delta_probability", "must lie in [0, 1]");
        if (multi && !k.delta && !k.delta_probability) k.delta = std::vector<bool>(nc, true);
        if (k.mode == "fixed_time") check_positive(k.horizon, "control.horizon");
        if (k.output_stride == 0) invariant_error("control.output_stride", "must be >= 1");
        try {
            k.fbsm.validate();
        } catch (const ArgumentError& e) {
            invariant_error("control.fbsm", e.what());
        }
    } else if (c.kind == "reachability") {
        require_block(c.reachability.has_value(), "reachability");
        if (multi) schema_error("model.cells", "reachability analyses single-cell models only");
        const auto& r = *c.reachability;
        check_index(r.gene, n, "reachability.gene");
        if (r.max_order < 1 || r.max_order > 6)
            invariant_error("reachability.max_order", "must lie in [1, 6]");
        check_positive(r.step, "reachability.step");
        if (r.csp_samples == 0) invariant_error("reachability.csp_samples", "must be >= 1");
        if (r.state) check_state(*r.state, n, "reachability.state");
    }

    // Anything the explicit checks missed surfaces from the model constructors.
    try {
        (void)build_system(m);
    } catch (const std::exception& e) {
        invariant_error("model", e.what());
    }
}

json rates_json(const RatesConfig& r) {
    return json{{"alpha", r.alpha}, {"beta", r.beta}, {"gamma", r.gamma}};
}

json state_json(const StateConfig& s) { return json{{"u", s.u}, {"s", s.s}}; }

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(exit_code::syntax, "", std::string("malformed JSON: ") + e.what());
    }
    check_keys(root, "",
               {"kind", "seed", "output_dir", "model", "initial", "simulate", "equilibrium",
                "stability", "consensus", "control", "reachability"});
    ScenarioConfig c;
    c.kind = as_string(require(root, "kind", ""), "kind");
    c.seed = unsigned_or(root, "seed", "", 0);
    if (const json* o = find(root, "output_dir")) c.output_dir = as_string(*o, "output_dir");
    c.model = parse_model(require(root, "model", ""), "model");
    if (const json* v = find(root, "initial")) c.initial = parse_initial(*v, "initial");
    if (const json* v = find(root, "simulate")) c.simulate = parse_simulate(*v, "simulate");
    if (const json* v = find(root, "equilibrium"))
        c.equilibrium = parse_equilibrium(*v, "equilibrium");
    if (const json* v = find(root, "stability")) c.stability = parse_stability(*v, "stability");
    if (const json* v = find(root, "consensus")) c.consensus = parse_consensus(*v, "consensus");
    if (const json* v = find(root, "control")) c.control = parse_control(*v, "control");
    if (const json* v = find(root, "reachability"))
        c.reachability = parse_reachability(*v, "reachability");
    validate(c);
    return c;
}

ScenarioConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(exit_code::usage, "", "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string dump_config(const ScenarioConfig& c) {
    json root;
    root["kind"] = c.kind;
    root["seed"] = c.seed;
    if (c.output_dir) root["output_dir"] = *c.output_dir;
    json model;
    model["kappa"] = c.model.kappa;
    model["w_plus"] = c.model.w_plus;
    model["w_minus"] = c.model.w_minus;
    model["rates"] = rates_json(c.model.rates);
    if (c.model.cells) {
        const auto& cells = *c.model.cells;
        json cj;
        cj["adjacency"] = cells.adjacency;
        cj["coupling"] = cells.coupling;
        json rates = json::array();
        for (const auto& r : cells.rates) rates.push_back(rates_json(r));
        cj["rates"] = rates;
        if (cells.regular_degree) cj["regular_degree"] = *cells.regular_degree;
        model["cells"] = cj;
    }
    root["model"] = model;
    if (c.initial) {
        if (c.initial->per_cell) {
            json cells = json::array();
            for (const auto& s : c.initial->states) cells.push_back(state_json(s));
            root["initial"] = json{{"cells", cells}};
        } else {
            root["initial"] = state_json(c.initial->states[0]);
        }
    }
    if (c.simulate) {
        const auto& s = *c.simulate;
        json ev = json::array();
        for (const auto& e : s.interventions) {
            json ej;
            ej["time"] = e.time;
            if (e.cell) ej["cell"] = *e.cell;
            ej["gene"] = e.gene;
            ej["parameter"] = e.parameter;
            ej["value"] = e.value;
            ev.push_back(ej);
        }
        root["simulate"] = json{{"horizon", s.horizon},
                                {"dt", s.dt},
                                {"interventions", ev},
                                {"output_stride", s.output_stride}};
    }
    if (c.equilibrium)
        root["equilibrium"] = json{{"tolerance", c.equilibrium->tolerance},
                                   {"max_iterations", c.equilibrium->max_iterations}};
    if (c.stability)
        root["stability"] = json{{"mode", c.stability->mode},
                                 {"horizon", c.stability->horizon},
                                 {"dt", c.stability->dt},
                                 {"output_stride", c.stability->output_stride}};
    if (c.consensus)
        root["consensus"] = json{{"horizon", c.consensus->horizon},
                                 {"dt", c.consensus->dt},
                                 {"output_stride", c.consensus->output_stride}};
    if (c.control) {
        const auto& k = *c.control;
        json cj;
        cj["gene"] = k.gene;
        cj["bounds"] = json::array({k.lower, k.upper});
        json targets = json::array();
        for (const auto& t : k.targets)
            targets.push_back(json{{"gene", t.gene}, {"cell", t.cell}, {"value", t.value}});
        cj["targets"] = targets;
        if (k.delta) {
            json d = json::array();
            for (bool b : *k.delta) d.push_back(b);
            cj["delta"] = d;
        }
        if (k.delta_probability) cj["delta_probability"] = *k.delta_probability;
        cj["mode"] = k.mode;
        cj["horizon"] = k.horizon;
        const auto& f = k.fbsm;
        cj["fbsm"] = json{{"bins", f.bins},
                          {"damping", f.damping},
                          {"penalty", f.penalty},
                          {"inner_tolerance", f.inner_tolerance},
                          {"inner_max_sweeps", f.inner_max_sweeps},
                          {"target_tolerance", f.target_tolerance},
                          {"t_lo", f.t_lo},
                          {"t_hi", f.t_hi},
                          {"outer_max_bisections", f.outer_max_bisections}};
        cj["output_stride"] = k.output_stride;
        root["control"] = cj;
    }
    if (c.reachability) {
        const auto& r = *c.reachability;
        json rj{{"gene", r.gene},
                {"max_order", r.max_order},
                {"step", r.step},
                {"csp_samples", r.csp_samples}};
        if (r.state) rj["state"] = state_json(*r.state);
        root["reachability"] = rj;
    }
    return root.dump(2) + "\n";
}

void override_dt(ScenarioConfig& config, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError(exit_code::usage, "--dt", "must be > 0");
    if (config.simulate) config.simulate->dt = dt;
    if (config.stability) config.stability->dt = dt;
    if (config.consensus) config.consensus->dt = dt;
}

GrnTopology build_topology(const ModelConfig& model) {
    return GrnTopology(Matrix::from_rows(model.w_plus), Matrix::from_rows(model.w_minus),
                       model.kappa);
}

MultiCellSystem build_system(const ModelConfig& model) {
    GrnTopology topo = build_topology(model);
    auto rates = [](const RatesConfig& r) { return RateParams(r.alpha, r.beta, r.gamma); };
    if (!model.cells) return MultiCellSystem(std::move(topo), {rates(model.rates)}, Matrix(1, 1), 0.0);
    std::vector<RateParams> cell_rates;
    for (const auto& r : model.cells->rates) cell_rates.push_back(rates(r));
    return MultiCellSystem(std::move(topo), std::move(cell_rates),
                           Matrix::from_rows(model.cells->adjacency), model.cells->coupling);
}

}  // namespace grnvelo

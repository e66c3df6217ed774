#include "io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "error.hpp"

namespace mfstop::io {

namespace {

std::string num(double v) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// JSON has no infinities; -inf is written as null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double strict_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
        throw InputError("not a number: '" + s + "'");
    return v;
}

double get_number(const json& j, const std::string& key) {
    if (!j.contains(key)) throw InputError("missing field '" + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number()) throw InputError("field '" + key + "' must be a number");
    return v.get<double>();
}

double get_number_or(const json& j, const std::string& key, double fallback) {
    return j.contains(key) ? get_number(j, key) : fallback;
}

std::vector<double> get_vector(const json& j, const std::string& key) {
    if (!j.contains(key)) throw InputError("missing field '" + key + "'");
    const auto& v = j.at(key);
    if (!v.is_array()) throw InputError("field '" + key + "' must be an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw InputError("field '" + key + "' must contain numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

long long parse_id(const std::string& s) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
        throw InputError("node id must be an integer: '" + s + "'");
    return v;
}

long long json_id(const json& v) {
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_string()) return parse_id(v.get<std::string>());
    throw InputError("node id must be an integer");
}

std::string label_of(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw InputError("cell id must be a string or an integer");
}

int node_of(const ScenarioTree& tree, const std::string& key) {
    const int n = tree.find(parse_id(key));
    if (n < 0) throw InputError("unknown node id " + key);
    return n;
}

std::vector<double> phi_from_json(const json& j, const ScenarioTree& tree) {
    if (!j.contains("phi") || (j.at("phi").is_string() && j.at("phi") == "normalized_time"))
        return normalized_time(tree.grid());
    auto phi = get_vector(j, "phi");
    if (phi.size() != static_cast<std::size_t>(tree.periods() + 1))
        throw InputError("phi must have one value per grid time");
    return phi;
}

std::string id_key(const ScenarioTree& tree, int n) { return std::to_string(tree.node(n).id); }

}  // namespace

double parse_probability(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (!v.is_string()) throw InputError("probability must be a number or a decimal string");
    const auto s = v.get<std::string>();
    const auto slash = s.find('/');
    if (slash == std::string::npos) return strict_double(s);
    const double a = strict_double(s.substr(0, slash));
    const double b = strict_double(s.substr(slash + 1));
    if (b == 0.0) throw InputError("zero denominator in '" + s + "'");
    return a / b;
}

TreeSpec tree_spec_from_json(const json& j) {
    if (!j.is_object()) throw InputError("tree model must be a JSON object");
    TreeSpec spec;
    spec.times = get_vector(j, "times");
    spec.rho = get_number_or(j, "rho", 0.0);
    if (!j.contains("nodes") || !j.at("nodes").is_array()) throw InputError("missing array 'nodes'");
    for (const auto& n : j.at("nodes")) {
        if (!n.is_object() || !n.contains("id") || !n.contains("time")) throw InputError("each node needs 'id' and 'time'");
        TreeSpec::Node node;
        node.id = json_id(n.at("id"));
        if (!n.at("time").is_number_integer()) throw InputError("node 'time' must be an integer index");
        node.time = n.at("time").get<int>();
        if (n.contains("parent") && !n.at("parent").is_null()) node.parent = json_id(n.at("parent"));
        node.prob = n.contains("prob") ? parse_probability(n.at("prob")) : 1.0;
        spec.nodes.push_back(node);
    }
    if (!j.contains("cells") || !j.at("cells").is_object()) throw InputError("missing object 'cells'");
    for (const auto& [k, v] : j.at("cells").items()) spec.cells.emplace_back(parse_id(k), label_of(v));
    if (j.contains("cell_labels")) {
        if (!j.at("cell_labels").is_array()) throw InputError("'cell_labels' must be an array");
        for (const auto& v : j.at("cell_labels")) spec.declared_cells.push_back(label_of(v));
    }
    return spec;
}

json tree_to_json(const ScenarioTree& tree) {
    auto spec = tree.spec();
    json j;
    j["times"] = spec.times;
    j["rho"] = spec.rho;
    j["nodes"] = json::array();
    for (const auto& n : spec.nodes) {
        json e{{"id", n.id}, {"time", n.time}, {"prob", n.prob}};
        e["parent"] = n.parent ? json(*n.parent) : json(nullptr);
        j["nodes"].push_back(e);
    }
    j["cells"] = json::object();
    for (const auto& [id, label] : spec.cells) j["cells"][std::to_string(id)] = label;
    return j;
}

AdaptedProcess node_values_from_json(const json& v, const ScenarioTree& tree, const std::string& field) {
    AdaptedProcess x(tree.size(), 0.0);
    if (v.is_number()) return AdaptedProcess(tree.size(), v.get<double>());
    if (!v.is_object()) throw InputError("field '" + field + "' must be a number or an object");
    if (v.contains("by_level")) {
        auto levels = get_vector(v, "by_level");
        if (levels.size() != static_cast<std::size_t>(tree.periods() + 1))
            throw InputError("field '" + field + "': by_level needs one value per grid time");
        for (std::size_t i = 0; i < tree.size(); ++i) x[i] = levels[tree.node(static_cast<int>(i)).level];
        return x;
    }
    std::vector<bool> seen(tree.size(), false);
    for (const auto& [k, e] : v.items()) {
        const int n = node_of(tree, k);
        if (!e.is_number()) throw InputError("field '" + field + "' must map node ids to numbers");
        x[n] = e.get<double>();
        seen[n] = true;
    }
    for (std::size_t i = 0; i < tree.size(); ++i)
        if (!seen[i]) throw InputError("field '" + field + "' has no value for node " + id_key(tree, static_cast<int>(i)));
    return x;
}

json node_values_to_json(const AdaptedProcess& x, const ScenarioTree& tree) {
    json j = json::object();
    for (std::size_t i = 0; i < tree.size(); ++i) j[id_key(tree, static_cast<int>(i))] = finite_or_null(x[i]);
    return j;
}

RewardSpec reward_spec_from_json(const json& j, const ScenarioTree& tree) {
    if (!j.is_object() || !j.contains("variant") || !j.at("variant").is_string())
        throw InputError("reward spec needs a string 'variant'");
    const auto variant = j.at("variant").get<std::string>();
    auto field = [&](const std::string& key) {
        if (!j.contains(key)) throw InputError("missing field '" + key + "'");
        return node_values_from_json(j.at(key), tree, key);
    };
    auto field_or_zero = [&](const std::string& key) {
        return j.contains(key) ? node_values_from_json(j.at(key), tree, key) : AdaptedProcess(tree.size(), 0.0);
    };

    RewardSpec spec;
    if (variant == "Tabular" || variant == "tabular") {
        TabularFamily t;
        t.h0 = field("h0");
        t.g0 = field("g0");
        t.coef_h = field_or_zero("coef_h");
        t.coef_g = field_or_zero("coef_g");
        t.coupling = coupling_from_name(j.value("coupling", std::string("none")));
        spec.family = std::move(t);
    } else if (variant == "MonotoneFamily" || variant == "monotone") {
        MonotoneFamily mf;
        mf.h0 = field("h0");
        mf.g0 = field("g0");
        mf.beta = get_number_or(j, "beta", 0.0);
        mf.gamma = get_number_or(j, "gamma", 0.0);
        mf.phi = phi_from_json(j, tree);
        spec.family = std::move(mf);
    } else if (variant == "ContinuityFamily" || variant == "continuity") {
        ContinuityFamily cf;
        cf.phi = phi_from_json(j, tree);
        if (!j.contains("x_rule") || !j.at("x_rule").is_object()) throw InputError("missing object 'x_rule'");
        const auto& xr = j.at("x_rule");
        if (!xr.contains("x0")) throw InputError("missing field 'x_rule.x0'");
        cf.x0 = node_values_from_json(xr.at("x0"), tree, "x_rule.x0");
        cf.slope = get_number_or(xr, "slope", 0.0);
        if (!j.contains("ghat") || !j.at("ghat").is_object()) throw InputError("missing object 'ghat'");
        cf.ghat.x = get_vector(j.at("ghat"), "x");
        cf.ghat.y = get_vector(j.at("ghat"), "y");
        cf.ghat.check();
        if (j.contains("hhat")) {
            const auto& hh = j.at("hhat");
            if (!hh.is_object()) throw InputError("'hhat' must be an object");
            if (hh.contains("window")) {
                if (!hh.at("window").is_number_integer() || hh.at("window").get<int>() < 1)
                    throw InputError("'hhat.window' must be a positive integer");
                cf.window = hh.at("window").get<int>();
            }
            cf.h_scale = get_number_or(hh, "scale", 0.0);
            cf.h_offset = get_number_or(hh, "offset", 0.0);
        }
        spec.family = std::move(cf);
    } else {
        throw InputError("unknown reward variant '" + variant + "'");
    }
    return spec;
}

json reward_spec_to_json(const RewardSpec& spec, const ScenarioTree& tree) {
    json j;
    j["variant"] = spec.variant_name();
    if (const auto* t = std::get_if<TabularFamily>(&spec.family)) {
        j["h0"] = node_values_to_json(t->h0, tree);
        j["g0"] = node_values_to_json(t->g0, tree);
        j["coef_h"] = node_values_to_json(t->coef_h, tree);
        j["coef_g"] = node_values_to_json(t->coef_g, tree);
        j["coupling"] = coupling_name(t->coupling);
    } else if (const auto* mf = std::get_if<MonotoneFamily>(&spec.family)) {
        j["h0"] = node_values_to_json(mf->h0, tree);
        j["g0"] = node_values_to_json(mf->g0, tree);
        j["beta"] = mf->beta;
        j["gamma"] = mf->gamma;
        j["phi"] = mf->phi;
    } else {
        const auto& cf = std::get<ContinuityFamily>(spec.family);
        j["phi"] = cf.phi;
        j["x_rule"] = {{"x0", node_values_to_json(cf.x0, tree)}, {"slope", cf.slope}};
        j["ghat"] = {{"x", cf.ghat.x}, {"y", cf.ghat.y}};
        j["hhat"] = {{"window", cf.window}, {"scale", cf.h_scale}, {"offset", cf.h_offset}};
    }
    return j;
}

RandomMeasure measure_from_json(const json& j, const ScenarioTree& tree) {
    if (!j.is_object() || !j.contains("cells") || !j.at("cells").is_object())
        throw InputError("random measure needs an object 'cells'");
    std::vector<MeasureOnGrid> cells(tree.num_cells());
    std::vector<bool> seen(tree.num_cells(), false);
    for (const auto& [label, masses] : j.at("cells").items()) {
        const int c = tree.cell_index(label);
        if (c < 0) throw InputError("unknown cell '" + label + "'");
        auto v = get_vector(j.at("cells"), label);
        if (v.size() != static_cast<std::size_t>(tree.periods() + 1))
            throw InputError("cell '" + label + "' needs one mass per grid time");
        try {
            cells[c] = MeasureOnGrid(std::move(v));
        } catch (const std::invalid_argument& e) {
            throw InputError("cell '" + label + "': " + e.what());
        }
        seen[c] = true;
    }
    for (int c = 0; c < tree.num_cells(); ++c)
        if (!seen[c]) throw InputError("random measure has no entry for cell '" + tree.cell_label(c) + "'");
    return RandomMeasure(std::move(cells));
}

json measure_to_json(const RandomMeasure& m, const ScenarioTree& tree) {
    json cells = json::object();
    for (int c = 0; c < tree.num_cells(); ++c) {
        auto masses = m.cell(c).masses();
        cells[tree.cell_label(c)] = std::vector<double>(masses.begin(), masses.end());
    }
    return {{"cells", cells}};
}

StopRule stop_from_json(const json& j, const ScenarioTree& tree) {
    if (!j.is_object() || !j.contains("kind")) throw InputError("stop rule needs 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "pure") {
        std::vector<std::uint8_t> flags(tree.size(), 0);
        if (!j.contains("flags") || !j.at("flags").is_object()) throw InputError("pure stop needs an object 'flags'");
        for (const auto& [k, v] : j.at("flags").items()) {
            const int n = node_of(tree, k);
            if (v.is_boolean())
                flags[n] = v.get<bool>();
            else if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1))
                flags[n] = static_cast<std::uint8_t>(v.get<int>());
            else
                throw InputError("stop flags must be 0/1 or booleans");
        }
        return PureStoppingTime(std::move(flags));
    }
    if (kind == "randomized") {
        if (!j.contains("A")) throw InputError("randomized stop needs 'A'");
        RandomizedStoppingTime a(node_values_from_json(j.at("A"), tree, "A"));
        try {
            a.check(tree);
        } catch (const std::invalid_argument& e) {
            throw InputError(std::string("randomized stop: ") + e.what());
        }
        return a;
    }
    throw InputError("unknown stop kind '" + kind + "'");
}

json stop_to_json(const StopRule& stop, const ScenarioTree& tree) {
    if (const auto* p = std::get_if<PureStoppingTime>(&stop)) {
        json flags = json::object();
        if (p->size() == tree.size())
            for (std::size_t i = 0; i < tree.size(); ++i)
                flags[id_key(tree, static_cast<int>(i))] = p->flagged(static_cast<int>(i)) ? 1 : 0;
        return {{"kind", "pure"}, {"flags", flags}};
    }
    const auto& a = std::get<RandomizedStoppingTime>(stop);
    return {{"kind", "randomized"}, {"A", node_values_to_json(a.cumulative(), tree)}};
}

json snell_to_json(const SnellResult& r, const ScenarioTree& tree) {
    return {{"value", node_values_to_json(r.value, tree)},
            {"root_value", r.value[0]},
            {"smallest_optimal", stop_to_json(r.smallest_optimal, tree)},
            {"largest_optimal", stop_to_json(r.largest_optimal, tree)}};
}

json bek_to_json(const BEKSolution& sol, const ScenarioTree& tree) {
    return {{"L", node_values_to_json(sol.L, tree)},
            {"M", node_values_to_json(sol.M, tree)},
            {"residual", sol.residual},
            {"tolerance", sol.tolerance}};
}

BEKSolution bek_from_json(const json& j, const ScenarioTree& tree) {
    if (!j.is_object() || !j.contains("L") || !j.at("L").is_object()) throw InputError("BEK solution needs an object 'L'");
    BEKSolution sol;
    sol.L = AdaptedProcess(tree.size(), -std::numeric_limits<double>::infinity());
    for (const auto& [k, v] : j.at("L").items()) {
        const int n = node_of(tree, k);
        if (v.is_number())
            sol.L[n] = v.get<double>();
        else if (!v.is_null())
            throw InputError("L values must be numbers or null");
    }
    for (std::size_t i = 0; i < tree.size(); ++i)
        if (!tree.is_leaf(static_cast<int>(i)) && !std::isfinite(sol.L[i]))
            throw InputError("L missing at node " + id_key(tree, static_cast<int>(i)));
    sol.M = running_max(tree, sol.L);
    sol.residual = get_number_or(j, "residual", 0.0);
    sol.tolerance = get_number_or(j, "tolerance", 0.0);
    return sol;
}

json report_to_json(const VerifyReport& r) {
    return {{"pass", r.pass},       {"gap_ok", r.gap_ok},   {"consistency_ok", r.consistency_ok},
            {"epsilon", r.epsilon}, {"gap", r.gap},         {"consistency", r.consistency},
            {"value", r.value},     {"optimum", r.optimum}, {"gap_tol", r.tol.gap},
            {"cons_tol", r.tol.consistency}};
}

json result_to_json(const EquilibriumResult& r, const ScenarioTree& tree) {
    json j;
    j["status"] = status_name(r.status);
    j["epsilon"] = r.epsilon;
    j["gap"] = r.gap;
    j["consistency"] = r.consistency;
    j["iterations"] = r.iterations;
    j["m_star"] = measure_to_json(r.m_star, tree);
    j["stop"] = stop_to_json(r.stop, tree);
    j["report"] = report_to_json(r.report);
    j["messages"] = r.messages;
    j["trace"] = json::array();
    for (const auto& t : r.trace)
        j["trace"].push_back({{"iter", t.iter}, {"distance", t.distance}, {"gap", t.gap}});
    return j;
}

json assumptions_to_json(const AssumptionReport& r) {
    json v = json::array();
    for (const auto& i : r.violations) v.push_back({{"where", i.where}, {"message", i.message}});
    return {{"pass", r.pass}, {"violations", v}, {"notes", r.notes}};
}

json comparative_to_json(const ComparativeReport& r, const ScenarioTree& tree) {
    auto verdict = [](const OrderVerdict& v) {
        return json{{"holds", v.holds}, {"checked", v.checked}, {"witness", v.witness}};
    };
    json j;
    j["pass"] = r.pass();
    j["assumptions"] = assumptions_to_json(r.assumptions);
    j["L_order"] = verdict(r.L_order);
    j["T_order"] = verdict(r.T_order);
    j["S_order"] = verdict(r.S_order);
    j["fixed_T_order"] = verdict(r.fixed_T_order);
    j["fixed_S_order"] = verdict(r.fixed_S_order);
    auto opt = [&](const std::optional<EquilibriumResult>& e) { return e ? result_to_json(*e, tree) : json(nullptr); };
    j["t_fixed_2"] = opt(r.t_fixed2);
    j["t_fixed_1"] = opt(r.t_fixed1);
    j["s_fixed_1"] = opt(r.s_fixed1);
    j["s_fixed_2"] = opt(r.s_fixed2);
    return j;
}

std::string trace_csv(const EquilibriumResult& r, const ScenarioTree& tree) {
    std::ostringstream os;
    os << "iter,cell,t_k,mass,distance,gap\n";
    const auto& times = tree.grid().times;
    for (const auto& t : r.trace)
        for (std::size_t c = 0; c < t.m.num_cells(); ++c)
            for (std::size_t k = 0; k < t.m.num_times(); ++k)
                os << t.iter << ',' << tree.cell_label(static_cast<int>(c)) << ',' << num(times[k]) << ','
                   << num(t.m.cell(c).mass(k)) << ',' << num(t.distance) << ',' << num(t.gap) << '\n';
    return os.str();
}

std::string running_sup_csv(const BEKSolution& sol, const ScenarioTree& tree) {
    std::ostringstream os;
    os << "leaf,k,t,M\n";
    for (int leaf : tree.leaves()) {
        auto v = running_sup_path(tree, sol, leaf);
        os << tree.node(leaf).id << ",0," << num(v.knots[0]) << ',' << num(v.at_zero) << '\n';
        for (std::size_t k = 0; k < v.values.size(); ++k)
            os << tree.node(leaf).id << ',' << k + 1 << ',' << num(v.knots[k + 1]) << ',' << num(v.values[k]) << '\n';
    }
    return os.str();
}

std::string level_table_csv(const BEKSolution& sol, const ScenarioTree& tree) {
    std::ostringstream os;
    os << "level,leaf,sigma_t,tau_t\n";
    const auto& times = tree.grid().times;
    for (double l : level_grid(tree, sol)) {
        auto [sigma, tau] = hitting_times(tree, sol, l);
        auto ls = sigma.stop_levels(tree);
        auto lt = tau.stop_levels(tree);
        auto leaves = tree.leaves();
        for (std::size_t i = 0; i < leaves.size(); ++i)
            os << num(l) << ',' << tree.node(leaves[i]).id << ',' << num(times[ls[i]]) << ',' << num(times[lt[i]])
               << '\n';
    }
    return os.str();
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("invalid JSON in '" + path + "': " + e.what());
    }
}

}  // namespace mfstop::io

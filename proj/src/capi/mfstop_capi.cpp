#include "mfstop/mfstop.h"

#include <exception>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "../core/bek.hpp"
#include "../core/equilibrium.hpp"
#include "../core/error.hpp"
#include "../core/io.hpp"
#include "../core/snell.hpp"

using mfstop::io::json;

struct mfstop_tree {
    mfstop::ScenarioTree tree;
};

struct mfstop_spec {
    mfstop::RewardSpec spec;
    json source;
};

struct mfstop_result {
    std::string json;
    std::vector<std::pair<std::string, std::string>> tables;
    mfstop_verdict verdict = MFSTOP_VERDICT_FAIL;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_json;

void clear_error() {
    g_error.clear();
    g_error_json.clear();
}

mfstop_status set_error(mfstop_status code, const char* kind, const std::string& msg,
                        const std::vector<std::string>& issues = {}) {
    g_error = msg;
    g_error_json = json{{"error", kind}, {"message", msg}, {"issues", issues}}.dump(2);
    return code;
}

template <class F>
mfstop_status guarded(F&& f) {
    clear_error();
    try {
        f();
        return MFSTOP_OK;
    } catch (const mfstop::ValidationError& e) {
        return set_error(MFSTOP_E_VALIDATION, "validation", e.what(), e.issues());
    } catch (const mfstop::InputError& e) {
        return set_error(MFSTOP_E_INPUT, "input", e.what());
    } catch (const json::exception& e) {
        return set_error(MFSTOP_E_INPUT, "input", e.what());
    } catch (const mfstop::SolverError& e) {
        return set_error(MFSTOP_E_SOLVER, "solver", e.what());
    } catch (const std::invalid_argument& e) {
        return set_error(MFSTOP_E_ARGUMENT, "argument", e.what());
    } catch (const std::exception& e) {
        return set_error(MFSTOP_E_INTERNAL, "internal", e.what());
    } catch (...) {
        return set_error(MFSTOP_E_INTERNAL, "internal", "unknown exception");
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

mfstop_options resolve(const mfstop_options* opts) {
    mfstop_options o;
    mfstop_options_default(&o);
    if (opts) o = *opts;
    return o;
}

mfstop::RandomMeasure measure_or_uniform(const mfstop::ScenarioTree& tree, const char* measure_json) {
    if (measure_json) return mfstop::io::measure_from_json(json::parse(measure_json), tree);
    return mfstop::RandomMeasure::constant(tree.num_cells(), mfstop::MeasureOnGrid::uniform(tree.periods() + 1));
}

std::vector<mfstop::RandomMeasure> check_samples(const mfstop::ScenarioTree& tree, int n, std::uint64_t seed) {
    const auto cells = static_cast<std::size_t>(tree.num_cells());
    const auto times = static_cast<std::size_t>(tree.periods() + 1);
    std::vector<mfstop::RandomMeasure> out{
        mfstop::RandomMeasure::bottom(cells, times), mfstop::RandomMeasure::top(cells, times),
        mfstop::RandomMeasure::constant(cells, mfstop::MeasureOnGrid::uniform(times))};
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n; ++i) out.push_back(mfstop::sample_random_measure(rng, cells, times));
    return out;
}

mfstop_verdict verdict_of(mfstop::Status s) {
    switch (s) {
        case mfstop::Status::Verified: return MFSTOP_VERDICT_PASS;
        case mfstop::Status::MaxIter: return MFSTOP_VERDICT_NONCONVERGED;
        default: return MFSTOP_VERDICT_FAIL;
    }
}

std::string summary_csv(const mfstop::EquilibriumResult& r) {
    std::string s = "metric,value\n";
    s += std::string("status,") + mfstop::status_name(r.status) + "\n";
    s += "epsilon," + json(r.epsilon).dump() + "\n";
    s += "gap," + json(r.gap).dump() + "\n";
    s += "consistency," + json(r.consistency).dump() + "\n";
    s += "iterations," + std::to_string(r.iterations) + "\n";
    return s;
}

mfstop_result* equilibrium_result(const mfstop::EquilibriumResult& r, const mfstop::ScenarioTree& tree, json extra = {}) {
    auto* out = new mfstop_result;
    json j = mfstop::io::result_to_json(r, tree);
    if (extra.is_object())
        for (auto& [k, v] : extra.items()) j[k] = v;
    out->json = j.dump(2);
    out->tables.emplace_back("trace.csv", mfstop::io::trace_csv(r, tree));
    out->tables.emplace_back("summary.csv", summary_csv(r));
    out->verdict = verdict_of(r.status);
    return out;
}

}  // namespace

extern "C" {

void mfstop_options_default(mfstop_options* opts) {
    if (!opts) return;
    opts->method = MFSTOP_METHOD_PICARD;
    opts->tarski_from = MFSTOP_FROM_BOTTOM;
    opts->tarski_map = MFSTOP_MAP_T;
    opts->epsilon = 1e-3;
    opts->damping = 0.5;
    opts->max_iter = 500;
    opts->tol_gap = 1e-9;
    opts->tol_cons = 1e-9;
    opts->tol_gap_limit = 1e-3;
    opts->n_samples = 20;
    opts->seed = 0;
}

const char* mfstop_version(void) { return "0.1.0"; }

const char* mfstop_last_error(void) { return g_error.c_str(); }
const char* mfstop_last_error_json(void) { return g_error_json.c_str(); }

mfstop_status mfstop_tree_load(const char* json_text, mfstop_tree** out) {
    return guarded([&] {
        require(json_text && out, "null argument");
        auto spec = mfstop::io::tree_spec_from_json(json::parse(json_text));
        *out = new mfstop_tree{mfstop::ScenarioTree::build(spec)};
    });
}

mfstop_status mfstop_tree_load_file(const char* path, mfstop_tree** out) {
    return guarded([&] {
        require(path && out, "null argument");
        auto spec = mfstop::io::tree_spec_from_json(mfstop::io::read_json_file(path));
        *out = new mfstop_tree{mfstop::ScenarioTree::build(spec)};
    });
}

size_t mfstop_tree_size(const mfstop_tree* tree) { return tree ? tree->tree.size() : 0; }

void mfstop_tree_free(mfstop_tree* tree) { delete tree; }

mfstop_status mfstop_spec_load(const mfstop_tree* tree, const char* json_text, mfstop_spec** out) {
    return guarded([&] {
        require(tree && json_text && out, "null argument");
        auto j = json::parse(json_text);
        *out = new mfstop_spec{mfstop::io::reward_spec_from_json(j, tree->tree), j};
    });
}

mfstop_status mfstop_spec_load_file(const mfstop_tree* tree, const char* path, mfstop_spec** out) {
    return guarded([&] {
        require(tree && path && out, "null argument");
        auto j = mfstop::io::read_json_file(path);
        *out = new mfstop_spec{mfstop::io::reward_spec_from_json(j, tree->tree), j};
    });
}

void mfstop_spec_free(mfstop_spec* spec) { delete spec; }

mfstop_status mfstop_validate(const mfstop_tree* tree, const mfstop_spec* spec, const mfstop_options* opts,
                              mfstop_result** out) {
    return guarded([&] {
        require(tree && out, "null argument");
        const auto o = resolve(opts);
        const auto& t = tree->tree;
        json cells = json::array();
        for (int c = 0; c < t.num_cells(); ++c) cells.push_back({{"cell", t.cell_label(c)}, {"prob", t.cell_prob(c)}});
        json j{{"tree", {{"ok", true}, {"nodes", t.size()}, {"periods", t.periods()}, {"cells", cells}}}};
        bool pass = true;
        if (spec) {
            auto samples = check_samples(t, o.n_samples, o.seed);
            auto standing = mfstop::check_standing_assumptions(spec->spec, t, samples);
            j["spec"] = {{"variant", spec->spec.variant_name()}, {"standing", mfstop::io::assumptions_to_json(standing)}};
            pass = standing.pass;
            if (std::holds_alternative<mfstop::MonotoneFamily>(spec->spec.family)) {
                auto mono = mfstop::check_monotone_assumptions(spec->spec, t, o.n_samples, o.seed);
                j["spec"]["monotone"] = mfstop::io::assumptions_to_json(mono);
                pass = pass && mono.pass;
            }
        }
        j["pass"] = pass;
        auto* r = new mfstop_result;
        r->json = j.dump(2);
        r->verdict = pass ? MFSTOP_VERDICT_PASS : MFSTOP_VERDICT_FAIL;
        *out = r;
    });
}

mfstop_status mfstop_snell(const mfstop_tree* tree, const mfstop_spec* spec, const char* measure_json,
                           const mfstop_options*, mfstop_result** out) {
    return guarded([&] {
        require(tree && spec && out, "null argument");
        const auto& t = tree->tree;
        auto m = measure_or_uniform(t, measure_json);
        auto [g, h] = mfstop::discounted(t, mfstop::evaluate(spec->spec, t, m));
        auto s = mfstop::snell_solve(t, g, h);
        json j{{"measure", mfstop::io::measure_to_json(m, t)}, {"snell", mfstop::io::snell_to_json(s, t)}};
        auto* r = new mfstop_result;
        r->json = j.dump(2);
        r->verdict = MFSTOP_VERDICT_PASS;
        *out = r;
    });
}

mfstop_status mfstop_bek(const mfstop_tree* tree, const mfstop_spec* spec, const char* measure_json,
                         const mfstop_options*, mfstop_result** out) {
    return guarded([&] {
        require(tree && spec && out, "null argument");
        const auto& t = tree->tree;
        auto m = measure_or_uniform(t, measure_json);
        auto sol = mfstop::solve_L(t, mfstop::build_problem(spec->spec, t, m));
        auto [sigma, tau] = mfstop::hitting_times(t, sol, 0.0);
        json j{{"measure", mfstop::io::measure_to_json(m, t)},
               {"bek", mfstop::io::bek_to_json(sol, t)},
               {"levels", mfstop::level_grid(t, sol)},
               {"sigma_0", mfstop::io::stop_to_json(sigma, t)},
               {"tau_0", mfstop::io::stop_to_json(tau, t)}};
        const bool pass = sol.residual <= 1e-8;
        j["pass"] = pass;
        auto* r = new mfstop_result;
        r->json = j.dump(2);
        r->tables.emplace_back("running_sup.csv", mfstop::io::running_sup_csv(sol, t));
        r->tables.emplace_back("levels.csv", mfstop::io::level_table_csv(sol, t));
        r->verdict = pass ? MFSTOP_VERDICT_PASS : MFSTOP_VERDICT_FAIL;
        *out = r;
    });
}

mfstop_status mfstop_equilibrium(const mfstop_tree* tree, const mfstop_spec* spec, const mfstop_options* opts,
                                 mfstop_result** out) {
    return guarded([&] {
        require(tree && spec && out, "null argument");
        const auto o = resolve(opts);
        const auto& t = tree->tree;
        if (o.method == MFSTOP_METHOD_TARSKI) {
            mfstop::TarskiOptions to;
            to.max_steps = o.max_iter;
            to.gap_tol = o.tol_gap;
            to.n_samples = o.n_samples;
            to.seed = o.seed;
            auto r = mfstop::tarski_solve(spec->spec, t,
                                          o.tarski_from == MFSTOP_FROM_TOP ? mfstop::TarskiStart::Top
                                                                           : mfstop::TarskiStart::Bottom,
                                          o.tarski_map == MFSTOP_MAP_S ? mfstop::TarskiMap::S : mfstop::TarskiMap::T, to);
            *out = equilibrium_result(r, t, {{"method", "tarski"}});
            return;
        }
        auto standing = mfstop::check_standing_assumptions(spec->spec, t, check_samples(t, o.n_samples, o.seed));
        if (!standing.pass) {
            mfstop::EquilibriumResult r;
            r.status = mfstop::Status::AssumptionViolation;
            r.epsilon = o.epsilon;
            r.m_star = measure_or_uniform(t, nullptr);
            for (const auto& v : standing.violations) r.messages.push_back(v.where + ": " + v.message);
            *out = equilibrium_result(r, t, {{"method", "picard"}});
            return;
        }
        mfstop::PicardOptions po;
        po.damping = o.damping;
        po.max_iter = o.max_iter;
        po.cons_tol = o.tol_cons;
        po.gap_tol = o.tol_gap;
        auto r = mfstop::picard_solve(spec->spec, t, o.epsilon, po);
        for (const auto& n : standing.notes) r.messages.push_back(n);
        *out = equilibrium_result(r, t, {{"method", "picard"}});
    });
}

mfstop_status mfstop_randomized_limit(const mfstop_tree* tree, const mfstop_spec* spec, const double* eps_seq,
                                      size_t n_eps, const mfstop_options* opts, mfstop_result** out) {
    return guarded([&] {
        require(tree && spec && eps_seq && out && n_eps > 0, "null argument");
        const auto o = resolve(opts);
        const auto& t = tree->tree;
        mfstop::LimitOptions lo;
        lo.picard.damping = o.damping;
        lo.picard.max_iter = o.max_iter;
        lo.picard.cons_tol = o.tol_cons;
        lo.picard.gap_tol = o.tol_gap;
        lo.cons_tol = o.tol_cons;
        lo.gap_tol = o.tol_gap_limit;
        std::vector<double> eps(eps_seq, eps_seq + n_eps);
        auto lr = mfstop::epsilon_limit_randomized(spec->spec, t, eps, lo);
        json runs = json::array();
        for (std::size_t k = 0; k < lr.runs.size(); ++k)
            runs.push_back({{"epsilon", eps[k]},
                            {"status", mfstop::status_name(lr.runs[k].status)},
                            {"gap", lr.runs[k].gap},
                            {"consistency", lr.runs[k].consistency},
                            {"iterations", lr.runs[k].iterations}});
        *out = equilibrium_result(lr.result, t,
                                  {{"method", "randomized-limit"},
                                   {"runs", runs},
                                   {"cluster", lr.cluster},
                                   {"cluster_tol", lr.cluster_tol}});
    });
}

mfstop_status mfstop_compare(const mfstop_tree* tree, const mfstop_spec* spec1, const mfstop_spec* spec2,
                             const mfstop_options* opts, mfstop_result** out) {
    return guarded([&] {
        require(tree && spec1 && spec2 && out, "null argument");
        const auto o = resolve(opts);
        mfstop::TarskiOptions to;
        to.max_steps = o.max_iter;
        to.gap_tol = o.tol_gap;
        to.n_samples = o.n_samples;
        to.seed = o.seed;
        auto rep = mfstop::comparative_statics(spec1->spec, spec2->spec, tree->tree, o.n_samples, o.seed, to);
        auto* r = new mfstop_result;
        r->json = mfstop::io::comparative_to_json(rep, tree->tree).dump(2);
        r->verdict = rep.pass() ? MFSTOP_VERDICT_PASS : MFSTOP_VERDICT_FAIL;
        *out = r;
    });
}

mfstop_status mfstop_verify(const mfstop_tree* tree, const mfstop_spec* spec, const char* candidate_json,
                            const mfstop_options* opts, mfstop_result** out) {
    return guarded([&] {
        require(tree && spec && candidate_json && out, "null argument");
        const auto o = resolve(opts);
        const auto& t = tree->tree;
        auto c = json::parse(candidate_json);
        if (!c.is_object() || !c.contains("m_star") || !c.contains("stop"))
            throw mfstop::InputError("candidate needs 'm_star' and 'stop'");
        auto m = mfstop::io::measure_from_json(c.at("m_star"), t);
        auto stop = mfstop::io::stop_from_json(c.at("stop"), t);
        const double eps = c.contains("epsilon") && c.at("epsilon").is_number() ? c.at("epsilon").get<double>() : o.epsilon;
        auto rep = mfstop::verify_equilibrium(spec->spec, t, m, stop, eps, {o.tol_gap, o.tol_cons});
        auto* r = new mfstop_result;
        r->json = mfstop::io::report_to_json(rep).dump(2);
        r->verdict = rep.pass ? MFSTOP_VERDICT_PASS : MFSTOP_VERDICT_FAIL;
        *out = r;
    });
}

const char* mfstop_result_json(const mfstop_result* r) { return r ? r->json.c_str() : ""; }

mfstop_verdict mfstop_result_verdict(const mfstop_result* r) { return r ? r->verdict : MFSTOP_VERDICT_FAIL; }

size_t mfstop_result_table_count(const mfstop_result* r) { return r ? r->tables.size() : 0; }

const char* mfstop_result_table_name(const mfstop_result* r, size_t i) {
    return r && i < r->tables.size() ? r->tables[i].first.c_str() : nullptr;
}

const char* mfstop_result_table_csv(const mfstop_result* r, size_t i) {
    return r && i < r->tables.size() ? r->tables[i].second.c_str() : nullptr;
}

void mfstop_result_free(mfstop_result* r) { delete r; }

}  // extern "C"

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "error.hpp"
#include "instances.hpp"
#include "io.hpp"

using namespace mfstop;
using namespace testing_support;
using nlohmann::json;

namespace {

const std::string kData = MFSTOP_DATA_DIR;

}  // namespace

TEST_CASE("probabilities") {
    CHECK(io::parse_probability(json(0.25)) == 0.25);
    CHECK(io::parse_probability(json("0.55")) == 0.55);
    CHECK(io::parse_probability(json("1/3")) == doctest::Approx(1.0 / 3.0).epsilon(1e-16));
    CHECK_THROWS_AS(io::parse_probability(json("half")), InputError);
    CHECK_THROWS_AS(io::parse_probability(json("1/0")), InputError);
    CHECK_THROWS_AS(io::parse_probability(json::array()), InputError);
}

TEST_CASE("tree documents") {
    auto j = json::parse(R"({"times":[0,1],"rho":0.1,
        "nodes":[{"id":0,"time":0},{"id":1,"time":1,"parent":0,"prob":"1/3"},
                 {"id":2,"time":1,"parent":0,"prob":"2/3"}],
        "cells":{"1":"a","2":"b"}})");
    auto tree = ScenarioTree::build(io::tree_spec_from_json(j));
    CHECK(tree.size() == 3);
    CHECK(tree.cell_prob(tree.cell_index("b")) == doctest::Approx(2.0 / 3.0));

    auto again = ScenarioTree::build(io::tree_spec_from_json(io::tree_to_json(tree)));
    CHECK(io::tree_to_json(again) == io::tree_to_json(tree));

    auto missing = j;
    missing.erase("cells");
    CHECK_THROWS_AS(io::tree_spec_from_json(missing), InputError);
    auto declared = j;
    declared["cell_labels"] = {"a", "b", "c"};
    CHECK_THROWS_AS(ScenarioTree::build(io::tree_spec_from_json(declared)), ValidationError);
    CHECK_THROWS_AS(io::read_json_file(kData + "/does_not_exist.json"), InputError);
}

TEST_CASE("bundled trees load") {
    auto demo = load_tree(kData + "/demo_tree.json");
    CHECK(demo.size() == 31);
    CHECK(demo.num_cells() == 2);
    auto bad = io::tree_spec_from_json(io::read_json_file(kData + "/bad_tree.json"));
    CHECK_FALSE(validate_tree(bad).ok());
}

TEST_CASE("node value forms") {
    auto tree = binary_tree(2, 0.5, 0.0, 1);
    auto c = io::node_values_from_json(json(1.5), tree, "h0");
    for (double v : c.values()) CHECK(v == 1.5);
    auto lv = io::node_values_from_json(json::parse(R"({"by_level":[1,2,3]})"), tree, "h0");
    CHECK(lv[0] == 1.0);
    CHECK(lv[2] == 2.0);
    CHECK(lv[6] == 3.0);
    json obj = json::object();
    for (std::size_t i = 0; i < tree.size(); ++i) obj[std::to_string(tree.node(static_cast<int>(i)).id)] = 0.5 * i;
    CHECK(io::node_values_from_json(obj, tree, "g0")[4] == 2.0);
    obj.erase("3");
    CHECK_THROWS_AS(io::node_values_from_json(obj, tree, "g0"), InputError);
    CHECK(io::node_values_from_json(io::node_values_to_json(lv, tree), tree, "x") == lv);
}

TEST_CASE("reward specs round trip") {
    auto tree = load_tree(kData + "/demo_tree.json");
    for (const char* name : {"demo_monotone.json", "demo_continuity.json"}) {
        auto spec = load_spec(kData + "/" + name, tree);
        auto j = io::reward_spec_to_json(spec, tree);
        auto again = io::reward_spec_from_json(j, tree);
        CHECK(io::reward_spec_to_json(again, tree) == j);
        CHECK(again.variant_name() == spec.variant_name());
        auto m = RandomMeasure::top(2, 5);
        CHECK(evaluate(again, tree, m).g == evaluate(spec, tree, m).g);
    }
    auto osc_tree = load_tree(kData + "/oscillator_tree.json");
    auto osc = load_spec(kData + "/oscillator_spec.json", osc_tree);
    CHECK(osc.variant_name() == "Tabular");
    CHECK_THROWS_AS(load_spec(kData + "/bad_spec.json", tree), InputError);

    auto j = io::reward_spec_to_json(load_spec(kData + "/demo_monotone.json", tree), tree);
    j["coupling"] = "quartic";
    j["variant"] = "tabular";
    CHECK_THROWS_AS(io::reward_spec_from_json(j, tree), InputError);
}

TEST_CASE("measures and stopping rules round trip") {
    Rng rng(1);
    auto tree = load_tree(kData + "/demo_tree.json");
    for (int rep = 0; rep < 20; ++rep) {
        auto m = sample_random_measure(rng, 2, 5);
        CHECK(io::measure_from_json(io::measure_to_json(m, tree), tree) == m);
        StopRule pure = random_pure_stop(rng, tree, 0.3);
        auto back = io::stop_from_json(io::stop_to_json(pure, tree), tree);
        CHECK(std::get<PureStoppingTime>(back).stop_nodes(tree) == std::get<PureStoppingTime>(pure).stop_nodes(tree));
        StopRule rnd = random_randomized_stop(rng, tree);
        auto rback = io::stop_from_json(io::stop_to_json(rnd, tree), tree);
        CHECK(std::get<RandomizedStoppingTime>(rback).cumulative() ==
              std::get<RandomizedStoppingTime>(rnd).cumulative());
    }
    CHECK_THROWS_AS(io::measure_from_json(json::parse(R"({"cells":{"A":[1,0,0,0,0]}})"), tree), InputError);
    CHECK_THROWS(io::measure_from_json(json::parse(R"({"cells":{"A":[1,0,0,0,0.5],"B":[0,0,0,0,1]}})"), tree));
}

TEST_CASE("index solutions round trip and re-verify") {
    Rng rng(2);
    auto tree = load_tree(kData + "/demo_tree.json");
    auto spec = load_spec(kData + "/demo_monotone.json", tree);
    auto p = build_problem(spec, tree, sample_random_measure(rng, 2, 5));
    auto sol = solve_L(tree, p);
    auto j = io::bek_to_json(sol, tree);
    auto back = io::bek_from_json(json::parse(j.dump()), tree);
    CHECK(back.L == sol.L);
    CHECK(back.M == sol.M);
    CHECK(verify_representation(tree, p, back.L) == sol.residual);
    CHECK(back.L[tree.leaves()[0]] == -std::numeric_limits<double>::infinity());
}

TEST_CASE("result documents") {
    auto tree = load_tree(kData + "/demo_tree.json");
    auto spec = load_spec(kData + "/demo_monotone.json", tree);
    auto res = tarski_solve(spec, tree, TarskiStart::Bottom, TarskiMap::T);
    auto j = io::result_to_json(res, tree);
    CHECK(j.at("status") == "verified");
    CHECK(j.at("report").at("pass") == true);
    auto m = io::measure_from_json(j.at("m_star"), tree);
    auto stop = io::stop_from_json(j.at("stop"), tree);
    auto rep = verify_equilibrium(spec, tree, m, stop, 0.0);
    CHECK(rep.pass);
    CHECK(rep.gap == res.report.gap);
    CHECK(rep.consistency == res.report.consistency);

    // Same candidate as the bundled file.
    auto cand = io::read_json_file(kData + "/demo_monotone_candidate.json");
    CHECK(io::measure_from_json(cand.at("m_star"), tree) == m);

    auto csv = io::trace_csv(res, tree);
    CHECK(csv.rfind("iter,cell,t_k,mass,distance,gap\n", 0) == 0);
    const auto rows = std::count(csv.begin(), csv.end(), '\n') - 1;
    CHECK(rows == static_cast<long>(res.trace.size() * 2 * 5));

    auto sol = solve_L(tree, build_problem(spec, tree, m));
    auto sup = io::running_sup_csv(sol, tree);
    CHECK(sup.rfind("leaf,k,t,M\n", 0) == 0);
    CHECK(sup.find("-inf") != std::string::npos);
    auto levels = io::level_table_csv(sol, tree);
    CHECK(levels.rfind("level,leaf,sigma_t,tau_t\n", 0) == 0);
    CHECK(std::count(levels.begin(), levels.end(), '\n') == 1 + 21 * 16);
}

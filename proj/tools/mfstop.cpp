#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfstop/mfstop.h"

namespace {

struct Config {
    std::string model;
    std::string spec;
    std::string spec2;
    std::string measure;
    std::string candidate;
    std::string method = "picard";
    std::string from = "bottom";
    std::string map = "T";
    std::vector<double> eps_seq;
    std::optional<double> epsilon;
    std::optional<double> damping;
    std::optional<int> max_iter;
    std::optional<double> tol_gap;
    std::optional<double> tol_cons;
    std::optional<int> samples;
    std::optional<std::uint64_t> seed;
    std::string out;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    f << text;
    if (text.empty() || text.back() != '\n') f << '\n';
}

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '"' || c == '\\') o += '\\';
        if (c == '\n') {
            o += "\\n";
            continue;
        }
        o += c;
    }
    return o;
}

// Error document for failures that happen before the library is involved.
std::string plain_error(const std::string& kind, const std::string& msg) {
    return "{\n  \"error\": \"" + escape(kind) + "\",\n  \"issues\": [],\n  \"message\": \"" + escape(msg) + "\"\n}";
}

int report_error(const Config& cfg, const std::string& doc) {
    std::cout << doc << '\n';
    if (!cfg.out.empty()) {
        std::filesystem::create_directories(cfg.out);
        write_file(std::filesystem::path(cfg.out) / "error.json", doc);
    }
    return 1;
}

int library_error(const Config& cfg) { return report_error(cfg, mfstop_last_error_json()); }

mfstop_options options(const Config& cfg) {
    mfstop_options o;
    mfstop_options_default(&o);
    o.method = cfg.method == "tarski" ? MFSTOP_METHOD_TARSKI : MFSTOP_METHOD_PICARD;
    o.tarski_from = cfg.from == "top" ? MFSTOP_FROM_TOP : MFSTOP_FROM_BOTTOM;
    o.tarski_map = cfg.map == "S" ? MFSTOP_MAP_S : MFSTOP_MAP_T;
    if (cfg.epsilon) o.epsilon = *cfg.epsilon;
    if (cfg.damping) o.damping = *cfg.damping;
    if (cfg.max_iter) o.max_iter = *cfg.max_iter;
    if (cfg.tol_gap) {
        o.tol_gap = *cfg.tol_gap;
        o.tol_gap_limit = *cfg.tol_gap;
    }
    if (cfg.tol_cons) o.tol_cons = *cfg.tol_cons;
    if (cfg.samples) o.n_samples = *cfg.samples;
    if (cfg.seed) {
        o.seed = *cfg.seed;
    } else if (const char* env = std::getenv("MFSTOP_SEED")) {
        o.seed = std::strtoull(env, nullptr, 10);
    }
    return o;
}

int emit(const Config& cfg, mfstop_result* r) {
    std::cout << mfstop_result_json(r) << '\n';
    if (!cfg.out.empty()) {
        std::filesystem::path dir(cfg.out);
        std::filesystem::create_directories(dir);
        write_file(dir / "result.json", mfstop_result_json(r));
        for (size_t i = 0; i < mfstop_result_table_count(r); ++i)
            write_file(dir / mfstop_result_table_name(r, i), mfstop_result_table_csv(r, i));
    }
    const auto v = mfstop_result_verdict(r);
    mfstop_result_free(r);
    if (v == MFSTOP_VERDICT_PASS) return 0;
    return v == MFSTOP_VERDICT_NONCONVERGED ? 2 : 1;
}

struct Handles {
    mfstop_tree* tree = nullptr;
    mfstop_spec* spec = nullptr;
    mfstop_spec* spec2 = nullptr;
    ~Handles() {
        mfstop_spec_free(spec2);
        mfstop_spec_free(spec);
        mfstop_tree_free(tree);
    }
};

int run(const std::string& command, const Config& cfg) {
    Handles h;
    if (mfstop_tree_load_file(cfg.model.c_str(), &h.tree) != MFSTOP_OK) return library_error(cfg);
    const bool need_spec = command != "validate";
    if (need_spec && cfg.spec.empty()) return report_error(cfg, plain_error("argument", "--spec is required"));
    if (!cfg.spec.empty() && mfstop_spec_load_file(h.tree, cfg.spec.c_str(), &h.spec) != MFSTOP_OK)
        return library_error(cfg);

    const auto o = options(cfg);
    mfstop_result* r = nullptr;
    mfstop_status st = MFSTOP_OK;
    std::string measure;
    if (!cfg.measure.empty()) measure = read_file(cfg.measure);
    const char* mptr = cfg.measure.empty() ? nullptr : measure.c_str();

    if (command == "validate") {
        st = mfstop_validate(h.tree, h.spec, &o, &r);
    } else if (command == "snell") {
        st = mfstop_snell(h.tree, h.spec, mptr, &o, &r);
    } else if (command == "bek") {
        st = mfstop_bek(h.tree, h.spec, mptr, &o, &r);
    } else if (command == "equilibrium") {
        st = mfstop_equilibrium(h.tree, h.spec, &o, &r);
    } else if (command == "randomized-limit") {
        std::vector<double> eps = cfg.eps_seq;
        if (eps.empty())
            for (int k = 1; k <= 12; ++k) eps.push_back(std::ldexp(1.0, -k));
        st = mfstop_randomized_limit(h.tree, h.spec, eps.data(), eps.size(), &o, &r);
    } else if (command == "compare") {
        if (cfg.spec2.empty()) return report_error(cfg, plain_error("argument", "--spec2 is required"));
        if (mfstop_spec_load_file(h.tree, cfg.spec2.c_str(), &h.spec2) != MFSTOP_OK) return library_error(cfg);
        st = mfstop_compare(h.tree, h.spec, h.spec2, &o, &r);
    } else if (command == "verify") {
        if (cfg.candidate.empty()) return report_error(cfg, plain_error("argument", "--candidate is required"));
        const auto cand = read_file(cfg.candidate);
        st = mfstop_verify(h.tree, h.spec, cand.c_str(), &o, &r);
    }
    if (st != MFSTOP_OK) return library_error(cfg);
    return emit(cfg, r);
}

void add_common(CLI::App* sub, Config& cfg) {
    sub->add_option("--model", cfg.model, "Scenario tree JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--spec", cfg.spec, "Reward spec JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", cfg.seed, "Seed for sampled checks (falls back to MFSTOP_SEED)");
    sub->add_option("--samples", cfg.samples, "Number of sampled measures in checks");
    sub->add_option("--out", cfg.out, "Output directory for result.json and CSV tables");
}

void add_solver(CLI::App* sub, Config& cfg) {
    sub->add_option("--epsilon", cfg.epsilon, "Target optimality gap");
    sub->add_option("--damping", cfg.damping, "Picard mixing weight in (0, 1]");
    sub->add_option("--max-iter", cfg.max_iter, "Iteration cap");
    sub->add_option("--tol-gap", cfg.tol_gap, "Gap tolerance of the verifier");
    sub->add_option("--tol-cons", cfg.tol_cons, "Consistency tolerance");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field optimal stopping solver and verifier"};
    app.require_subcommand(1);
    Config cfg;

    auto* validate = app.add_subcommand("validate", "Check a tree and, optionally, a reward spec");
    add_common(validate, cfg);

    auto* snell = app.add_subcommand("snell", "Backward-induction values under a measure");
    add_common(snell, cfg);
    snell->add_option("--measure", cfg.measure, "Random measure JSON (uniform if absent)")->check(CLI::ExistingFile);

    auto* bek = app.add_subcommand("bek", "Index process, representation residual and hitting tables");
    add_common(bek, cfg);
    bek->add_option("--measure", cfg.measure, "Random measure JSON (uniform if absent)")->check(CLI::ExistingFile);

    auto* eq = app.add_subcommand("equilibrium", "Search for a mean-field equilibrium");
    add_common(eq, cfg);
    add_solver(eq, cfg);
    eq->add_option("--method", cfg.method, "picard or tarski")->check(CLI::IsMember({"picard", "tarski"}));
    eq->add_option("--from", cfg.from, "Tarski start: bottom or top")->check(CLI::IsMember({"bottom", "top"}));
    eq->add_option("--map", cfg.map, "Tarski map: T (largest) or S (smallest)")->check(CLI::IsMember({"T", "S"}));

    auto* limit = app.add_subcommand("randomized-limit", "Randomized equilibrium as an epsilon -> 0 limit");
    add_common(limit, cfg);
    add_solver(limit, cfg);
    limit->add_option("--eps-seq", cfg.eps_seq, "Strictly decreasing epsilons (default 2^-1 .. 2^-12)")->delimiter(',');

    auto* compare = app.add_subcommand("compare", "Comparative statics between two ordered specs");
    add_common(compare, cfg);
    add_solver(compare, cfg);
    compare->add_option("--spec2", cfg.spec2, "Second reward spec JSON")->check(CLI::ExistingFile);

    auto* verify = app.add_subcommand("verify", "Verify a candidate equilibrium");
    add_common(verify, cfg);
    add_solver(verify, cfg);
    verify->add_option("--candidate", cfg.candidate, "Candidate JSON with m_star and stop")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cout << plain_error("usage", e.what()) << '\n';
        return 1;
    }

    try {
        return run(app.get_subcommands().front()->get_name(), cfg);
    } catch (const std::exception& e) {
        return report_error(cfg, plain_error("io", e.what()));
    }
}

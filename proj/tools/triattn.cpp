// Command-line frontend for the TriAttention pipeline:
//   synth -> calibrate -> reconstruct -> simulate, plus the DFS benchmark.
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 internal error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "triattn/cache.hpp"
#include "triattn/dfs.hpp"
#include "triattn/error.hpp"
#include "triattn/rng.hpp"
#include "triattn/scoring.hpp"
#include "triattn/stats.hpp"
#include "triattn/synth.hpp"
#include "triattn/trig.hpp"

namespace {

using nlohmann::json;

std::string slurp(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw triattn::format_error("cannot open file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string & path, const std::string & text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw triattn::format_error("cannot open output file: " + path);
    }
    out << text;
}

// `geometric:<min>:<max>` or `linear:<min>:<max>:<count>`
triattn::OffsetSet parse_offsets(const std::string & flag) {
    std::vector<std::string> parts;
    std::istringstream ss(flag);
    std::string part;
    while (std::getline(ss, part, ':')) {
        parts.push_back(part);
    }
    try {
        if (parts.size() == 3 && parts[0] == "geometric") {
            return triattn::make_geometric_offsets(std::stoull(parts[1]), std::stoull(parts[2]));
        }
        if (parts.size() == 4 && parts[0] == "linear") {
            return triattn::make_linear_offsets(std::stoull(parts[1]), std::stoull(parts[2]),
                                                std::stoull(parts[3]));
        }
    } catch (const std::logic_error &) {
        // fall through to the usage error
    }
    throw triattn::invalid_argument_error(
        "offsets must be geometric:<min>:<max> or linear:<min>:<max>:<count>, got " + flag);
}

json offsets_json(const triattn::OffsetSet & set) {
    return json(set.offsets);
}

struct SynthArgs {
    std::size_t tokens = 1024;
    std::size_t head_dim = 8;
    std::size_t q_heads = 1;
    std::size_t k_heads = 1;
    double kappa = 50.0;
    double norm_jitter = 0.0;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_synth(const SynthArgs & a) {
    const auto spec = triattn::SynthHeadSpec::uniform(a.head_dim, a.kappa, a.norm_jitter, a.seed);
    const auto trace = triattn::generate_trace(spec, a.tokens, a.q_heads, a.k_heads);
    triattn::write_trace_file(trace, a.out);
    spit(a.out + ".json", triattn::synth_sidecar_json(spec, a.tokens, a.q_heads, a.k_heads));
    std::cout << "wrote " << a.out << " (" << a.tokens << " tokens)" << std::endl;
    return 0;
}

struct CalibrateArgs {
    std::string trace;
    double theta = 10000.0;
    std::string out;
};

int cmd_calibrate(const CalibrateArgs & a) {
    const auto trace = triattn::load_trace_file(a.trace);
    const auto spec = triattn::make_frequency_spec(trace.head_dim, a.theta);
    const auto calib = triattn::calibrate(trace, spec);
    spit(a.out, triattn::calibration_to_json(calib));
    std::cout << "wrote " << a.out << " (" << calib.heads.size() << " q-heads)" << std::endl;
    return 0;
}

struct ReconstructArgs {
    std::string trace;
    std::string stats;
    std::uint64_t max_delta = 0;  // 0 = derive from trace length
    std::string out;
    std::string csv;
};

int cmd_reconstruct(const ReconstructArgs & a) {
    const auto trace = triattn::load_trace_file(a.trace);
    const auto calib = triattn::calibration_from_json(slurp(a.stats));
    const std::uint64_t max_delta =
        a.max_delta > 0 ? a.max_delta : (trace.num_tokens > 1 ? trace.num_tokens - 1 : 1);
    const auto distances = triattn::log_spaced_distances(max_delta);
    const std::size_t group = trace.group_size();

    json doc;
    doc["config"] = {{"trace", a.trace}, {"stats", a.stats}, {"max_delta", max_delta},
                     {"distances", distances}};
    doc["heads"] = json::array();
    std::ostringstream csv;
    csv << "q_head,mean_r\n";
    for (std::size_t g = 0; g < trace.num_q_heads; ++g) {
        const auto report = triattn::reconstruction_correlation(trace, calib.heads.at(g), g,
                                                                calib.spec, distances, group);
        doc["heads"].push_back({
            {"q_head_index", g},
            {"mean_r", report.mean_r},
            {"n_queries", report.n_queries},
            {"per_query_r", report.per_query_r},
            {"distances_used", report.distances_used},
            {"skipped_queries", report.skipped_queries},
            {"skipped_zero_variance", report.skipped_zero_variance},
        });
        csv << g << "," << report.mean_r << "\n";
    }
    spit(a.out, doc.dump(2));
    if (!a.csv.empty()) {
        spit(a.csv, csv.str());
    }
    std::cout << "wrote " << a.out << std::endl;
    return 0;
}

struct SimulateArgs {
    std::string trace;
    std::string stats;
    std::size_t budget = 2048;
    std::size_t window = 128;
    std::string offsets = "geometric:1:65536";
    bool no_trig = false;
    bool no_mrl_weight = false;
    bool protect_recent = false;
    std::string out;
};

int cmd_simulate(const SimulateArgs & a) {
    // validate flags before touching any input file
    triattn::PruneConfig config;
    config.budget = a.budget;
    config.window = a.window;
    config.offsets = parse_offsets(a.offsets);
    const auto trace = triattn::load_trace_file(a.trace);
    const auto calib = triattn::calibration_from_json(slurp(a.stats));
    config.group_size = trace.group_size();
    config.use_trig = !a.no_trig;
    config.mrl_weight = !a.no_mrl_weight;
    config.protect_recent = a.protect_recent;
    const auto report = triattn::simulate_decode(trace, calib, config);
    spit(a.out, triattn::decode_report_to_json(report));
    std::cout << "wrote " << a.out << " (" << report.evictions.size() << " evictions)" << std::endl;
    return 0;
}

struct DfsArgs {
    std::size_t nodes = 16;
    double density = 0.15;
    std::size_t min_steps = 6;
    std::size_t max_steps = 20;
    std::size_t per_step = 80;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_dfs(const DfsArgs & a) {
    json doc;
    doc["config"] = {{"nodes", a.nodes}, {"density", a.density}, {"min_steps", a.min_steps},
                     {"max_steps", a.max_steps}, {"per_step", a.per_step}, {"seed", a.seed}};
    doc["instances"] = json::array();
    std::size_t id = 0;
    for (std::size_t steps = a.min_steps; steps <= a.max_steps; ++steps) {
        for (std::size_t i = 0; i < a.per_step; ++i) {
            const std::uint64_t inst_seed = triattn::keyed_hash(a.seed, steps, i, 0, 0);
            const auto inst = triattn::generate_instance(a.nodes, a.density, steps, inst_seed);
            const auto states = triattn::dfs_trace(inst);
            json entry = json::parse(triattn::instance_to_json(inst, states.back()));
            entry["id"] = id++;
            doc["instances"].push_back(std::move(entry));
        }
    }
    spit(a.out, doc.dump(2));
    std::cout << "wrote " << a.out << " (" << id << " instances)" << std::endl;
    return 0;
}

struct DfsScoreArgs {
    std::string truth;
    std::string answers;
    std::string out;
};

// answers file: JSON [{"id": <n>, "text": "current: ...; stack: ...; visited: ..."}]
int cmd_dfs_score(const DfsScoreArgs & a) {
    json truth_doc;
    json answers_doc;
    try {
        truth_doc = json::parse(slurp(a.truth));
        answers_doc = json::parse(slurp(a.answers));
    } catch (const json::exception & e) {
        throw triattn::format_error(std::string("JSON parse failure: ") + e.what());
    }

    std::map<std::size_t, triattn::DfsState> truths;
    for (const auto & entry : truth_doc.at("instances")) {
        triattn::DfsState st;
        st.current = entry.at("truth").at("current").get<int>();
        st.stack = entry.at("truth").at("stack").get<std::vector<int>>();
        const auto visited = entry.at("truth").at("visited").get<std::vector<int>>();
        st.visited.insert(visited.begin(), visited.end());
        truths.emplace(entry.at("id").get<std::size_t>(), std::move(st));
    }

    std::size_t n = 0;
    std::size_t stack_hits = 0;
    std::size_t current_hits = 0;
    std::size_t visited_hits = 0;
    std::size_t parse_failures = 0;
    for (const auto & entry : answers_doc) {
        const auto it = truths.find(entry.at("id").get<std::size_t>());
        if (it == truths.end()) {
            throw triattn::format_error("answer id has no matching truth instance");
        }
        ++n;
        const auto parsed = triattn::parse_answer(entry.at("text").get<std::string>());
        if (!parsed) {
            ++parse_failures;
            continue;  // counts 0 on all fields
        }
        const auto score = triattn::score_answer(it->second, *parsed);
        stack_hits += std::size_t(score.stack_exact);
        current_hits += std::size_t(score.current_exact);
        visited_hits += std::size_t(score.visited_exact);
    }
    if (n == 0) {
        throw triattn::empty_input_error("answers file contains no entries");
    }
    json doc;
    doc["config"] = {{"truth", a.truth}, {"answers", a.answers}};
    doc["n"] = n;
    doc["parse_failures"] = parse_failures;
    doc["stack_exact"] = double(stack_hits) / double(n);
    doc["current_exact"] = double(current_hits) / double(n);
    doc["visited_exact"] = double(visited_hits) / double(n);
    spit(a.out, doc.dump(2));
    std::cout << "wrote " << a.out << std::endl;
    return 0;
}

} // namespace

int main(int argc, char ** argv) {
    CLI::App app{"TriAttention KV-cache compression toolkit"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto * synth = app.add_subcommand("synth", "Generate a synthetic QK trace");
    synth->add_option("--tokens", synth_args.tokens);
    synth->add_option("--head-dim", synth_args.head_dim);
    synth->add_option("--q-heads", synth_args.q_heads);
    synth->add_option("--k-heads", synth_args.k_heads);
    synth->add_option("--kappa", synth_args.kappa, "Angular concentration (0 = uniform)");
    synth->add_option("--norm-jitter", synth_args.norm_jitter);
    synth->add_option("--seed", synth_args.seed);
    synth->add_option("--out", synth_args.out)->required();

    CalibrateArgs calibrate_args;
    auto * calibrate = app.add_subcommand("calibrate", "Compute per-head Q/K statistics");
    calibrate->add_option("--trace", calibrate_args.trace)->required();
    calibrate->add_option("--theta", calibrate_args.theta);
    calibrate->add_option("--out", calibrate_args.out)->required();

    ReconstructArgs reconstruct_args;
    auto * reconstruct = app.add_subcommand("reconstruct", "Reconstruction correlation report");
    reconstruct->add_option("--trace", reconstruct_args.trace)->required();
    reconstruct->add_option("--stats", reconstruct_args.stats)->required();
    reconstruct->add_option("--max-delta", reconstruct_args.max_delta);
    reconstruct->add_option("--out", reconstruct_args.out)->required();
    reconstruct->add_option("--csv", reconstruct_args.csv);

    SimulateArgs simulate_args;
    auto * simulate = app.add_subcommand("simulate", "Windowed pruning decode simulation");
    simulate->add_option("--trace", simulate_args.trace)->required();
    simulate->add_option("--stats", simulate_args.stats)->required();
    simulate->add_option("--budget", simulate_args.budget);
    simulate->add_option("--window", simulate_args.window);
    simulate->add_option("--offsets", simulate_args.offsets);
    simulate->add_flag("--no-trig", simulate_args.no_trig);
    simulate->add_flag("--no-mrl-weight", simulate_args.no_mrl_weight);
    simulate->add_flag("--protect-recent", simulate_args.protect_recent);
    simulate->add_option("--out", simulate_args.out)->required();

    DfsArgs dfs_args;
    auto * dfs = app.add_subcommand("dfs", "Generate DFS benchmark instances + ground truth");
    dfs->add_option("--nodes", dfs_args.nodes);
    dfs->add_option("--density", dfs_args.density);
    dfs->add_option("--min-steps", dfs_args.min_steps);
    dfs->add_option("--max-steps", dfs_args.max_steps);
    dfs->add_option("--per-step", dfs_args.per_step);
    dfs->add_option("--seed", dfs_args.seed);
    dfs->add_option("--out", dfs_args.out)->required();

    DfsScoreArgs dfs_score_args;
    auto * dfs_score = app.add_subcommand("dfs-score", "Score answers against ground truth");
    dfs_score->add_option("--truth", dfs_score_args.truth)->required();
    dfs_score->add_option("--answers", dfs_score_args.answers)->required();
    dfs_score->add_option("--out", dfs_score_args.out)->required();

    try {
        app.parse(argc, argv);
        if (synth->parsed()) {
            return cmd_synth(synth_args);
        }
        if (calibrate->parsed()) {
            return cmd_calibrate(calibrate_args);
        }
        if (reconstruct->parsed()) {
            return cmd_reconstruct(reconstruct_args);
        }
        if (simulate->parsed()) {
            return cmd_simulate(simulate_args);
        }
        if (dfs->parsed()) {
            return cmd_dfs(dfs_args);
        }
        if (dfs_score->parsed()) {
            return cmd_dfs_score(dfs_score_args);
        }
        std::cerr << "error: no subcommand" << std::endl;
        return 1;
    } catch (const CLI::ParseError & e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        std::cerr << "error: usage: " << e.what() << std::endl;
        return 1;
    } catch (const triattn::error & e) {
        std::cerr << "error: " << e.what() << std::endl;
        switch (e.code()) {
            case triattn::errc::usage: return 1;
            case triattn::errc::data: return 2;
            case triattn::errc::internal: return 3;
        }
        return 3;
    } catch (const std::exception & e) {
        std::cerr << "error: internal: " << e.what() << std::endl;
        return 3;
    }
}

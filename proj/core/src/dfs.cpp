#include "triattn/dfs.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "json.hpp"
#include "triattn/error.hpp"
#include "triattn/rng.hpp"

namespace triattn {

namespace {

std::vector<std::vector<int>> adjacency(const DfsInstance & inst) {
    std::vector<std::vector<int>> adj(inst.num_nodes);
    for (auto [a, b] : inst.edges) {
        adj[std::size_t(a)].push_back(b);
        adj[std::size_t(b)].push_back(a);
    }
    for (auto & nbrs : adj) {
        std::sort(nbrs.begin(), nbrs.end());
    }
    return adj;
}

// A full DFS from start makes V-1 pushes and V-1 pops on a connected graph.
std::size_t max_steps(std::size_t num_nodes) {
    return 2 * (num_nodes - 1);
}

} // namespace

DfsInstance generate_instance(std::size_t num_nodes, double edge_density, std::size_t steps,
                              std::uint64_t seed) {
    if (num_nodes < 2) {
        throw generation_error("num_nodes must be >= 2");
    }
    if (edge_density < 0.0 || edge_density > 1.0) {
        throw generation_error("edge_density must be in [0,1]");
    }
    SplitMixStream rng(seed);

    std::set<std::pair<int, int>> edges;
    // random spanning tree over a shuffled node order guarantees connectivity
    std::vector<int> order(num_nodes);
    for (std::size_t i = 0; i < num_nodes; ++i) {
        order[i] = int(i);
    }
    for (std::size_t i = num_nodes - 1; i > 0; --i) {
        std::swap(order[i], order[rng.below(i + 1)]);
    }
    for (std::size_t i = 1; i < num_nodes; ++i) {
        const int a = order[i];
        const int b = order[rng.below(i)];
        edges.emplace(std::min(a, b), std::max(a, b));
    }
    for (std::size_t a = 0; a < num_nodes; ++a) {
        for (std::size_t b = a + 1; b < num_nodes; ++b) {
            if (rng.uniform() < edge_density) {
                edges.emplace(int(a), int(b));
            }
        }
    }

    DfsInstance inst;
    inst.num_nodes = num_nodes;
    inst.edges.assign(edges.begin(), edges.end());
    inst.start = int(rng.below(num_nodes));
    inst.seed = seed;
    inst.requested_steps = steps;
    inst.steps = std::min(steps, max_steps(num_nodes));
    inst.clamped = inst.steps != steps;
    return inst;
}

std::vector<DfsState> dfs_trace(const DfsInstance & inst) {
    const auto adj = adjacency(inst);
    const std::size_t k = std::min(inst.steps, max_steps(inst.num_nodes));

    DfsState state;
    state.current = inst.start;
    state.stack = {inst.start};
    state.visited = {inst.start};
    std::vector<DfsState> states;
    states.reserve(k + 1);
    states.push_back(state);

    for (std::size_t step = 0; step < k; ++step) {
        int next = -1;
        for (int nbr : adj[std::size_t(state.current)]) {
            if (!state.visited.contains(nbr)) {
                next = nbr;
                break;
            }
        }
        if (next >= 0) {
            state.stack.push_back(next);
            state.visited.insert(next);
            state.current = next;
        } else {
            if (state.stack.size() <= 1) {
                break;  // traversal exhausted; cannot happen after the clamp
            }
            state.stack.pop_back();
            state.current = state.stack.back();
        }
        states.push_back(state);
    }
    return states;
}

AnswerScore score_answer(const DfsState & truth, const DfsState & answer) {
    AnswerScore s;
    s.stack_exact = truth.stack == answer.stack ? 1 : 0;
    s.current_exact = truth.current == answer.current ? 1 : 0;
    s.visited_exact = truth.visited == answer.visited ? 1 : 0;
    return s;
}

std::string render_prompt(const DfsInstance & inst) {
    std::ostringstream out;
    out << "Simulate depth-first search on an undirected graph.\n";
    out << "Nodes: 0.." << inst.num_nodes - 1 << "\n";
    out << "Edges:";
    for (auto [a, b] : inst.edges) {
        out << " (" << a << "," << b << ")";
    }
    out << "\n";
    out << "Start node: " << inst.start << "\n";
    out << "Rules: each step either descends to the smallest-id unvisited neighbor"
           " of the current node, or backtracks one node when none exists."
           " A backtrack counts as one step.\n";
    out << "Perform exactly " << inst.steps << " steps.\n";
    out << "Answer in exactly this format:\n";
    out << "current: <id>; stack: <id,...>; visited: <id,...>\n";
    return out.str();
}

std::string render_answer(const DfsState & state) {
    std::ostringstream out;
    out << "current: " << state.current << "; stack: ";
    for (std::size_t i = 0; i < state.stack.size(); ++i) {
        out << (i ? "," : "") << state.stack[i];
    }
    out << "; visited: ";
    std::size_t i = 0;
    for (int v : state.visited) {
        out << (i++ ? "," : "") << v;
    }
    return out.str();
}

namespace {

void skip_spaces(std::string_view & s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
}

bool consume(std::string_view & s, std::string_view token) {
    skip_spaces(s);
    if (s.substr(0, token.size()) != token) {
        return false;
    }
    s.remove_prefix(token.size());
    return true;
}

std::optional<int> parse_int(std::string_view & s) {
    skip_spaces(s);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || value < 0) {
        return std::nullopt;
    }
    s.remove_prefix(std::size_t(ptr - s.data()));
    return value;
}

std::optional<std::vector<int>> parse_int_list(std::string_view & s) {
    std::vector<int> out;
    auto first = parse_int(s);
    if (!first) {
        return std::nullopt;
    }
    out.push_back(*first);
    while (true) {
        skip_spaces(s);
        if (s.empty() || s.front() != ',') {
            break;
        }
        s.remove_prefix(1);
        auto next = parse_int(s);
        if (!next) {
            return std::nullopt;
        }
        out.push_back(*next);
    }
    return out;
}

} // namespace

std::optional<DfsState> parse_answer(std::string_view text) {
    std::string_view s = text;
    DfsState state;
    if (!consume(s, "current:")) {
        return std::nullopt;
    }
    auto current = parse_int(s);
    if (!current || !consume(s, ";") || !consume(s, "stack:")) {
        return std::nullopt;
    }
    auto stack = parse_int_list(s);
    if (!stack || !consume(s, ";") || !consume(s, "visited:")) {
        return std::nullopt;
    }
    auto visited = parse_int_list(s);
    if (!visited) {
        return std::nullopt;
    }
    skip_spaces(s);
    if (!s.empty()) {
        return std::nullopt;
    }
    state.current = *current;
    state.stack = std::move(*stack);
    state.visited.insert(visited->begin(), visited->end());
    return state;
}

std::string instance_to_json(const DfsInstance & inst, const DfsState & truth) {
    nlohmann::json doc;
    doc["num_nodes"] = inst.num_nodes;
    doc["edges"] = nlohmann::json::array();
    for (auto [a, b] : inst.edges) {
        doc["edges"].push_back({a, b});
    }
    doc["start"] = inst.start;
    doc["steps"] = inst.steps;
    doc["requested_steps"] = inst.requested_steps;
    doc["clamped"] = inst.clamped;
    doc["seed"] = inst.seed;
    doc["prompt"] = render_prompt(inst);
    doc["truth"] = {
        {"current", truth.current},
        {"stack", truth.stack},
        {"visited", std::vector<int>(truth.visited.begin(), truth.visited.end())},
    };
    return doc.dump(2);
}

} // namespace triattn

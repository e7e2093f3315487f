#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace triattn {

// A connected undirected graph plus a deterministic DFS task: simulate
// `steps` push/pop steps from `start`. A step is a single push (descend to
// the smallest-id unvisited neighbor) or a single pop (backtrack).
struct DfsInstance {
    std::size_t num_nodes = 0;
    std::vector<std::pair<int, int>> edges;  // normalized a < b, sorted, unique
    int start = 0;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
    bool clamped = false;            // steps were clamped to the realizable maximum
    std::size_t requested_steps = 0; // pre-clamp value
};

struct DfsState {
    int current = 0;
    std::vector<int> stack;  // path from start to current
    std::set<int> visited;

    bool operator==(const DfsState &) const = default;
};

struct AnswerScore {
    int stack_exact = 0;
    int current_exact = 0;
    int visited_exact = 0;
};

// Erdos-Renyi edges at the given density plus a random spanning tree for
// connectivity; deterministic under seed.
DfsInstance generate_instance(std::size_t num_nodes, double edge_density, std::size_t steps,
                              std::uint64_t seed);

// States 0..k; state 0 is {start, [start], {start}}.
std::vector<DfsState> dfs_trace(const DfsInstance & instance);

AnswerScore score_answer(const DfsState & truth, const DfsState & answer);

// Deterministic textual task description (sorted edge list, fixed template).
std::string render_prompt(const DfsInstance & instance);

// Accepts `current: <id>; stack: <id,...>; visited: <id,...>`.
// Malformed text returns nullopt, which scores 0 on all fields.
std::optional<DfsState> parse_answer(std::string_view text);

std::string render_answer(const DfsState & state);

std::string instance_to_json(const DfsInstance & instance, const DfsState & truth);

} // namespace triattn

#pragma once

// Shared internals of the checker translation units.

#include <functional>
#include <unordered_map>
#include <vector>

#include "protofsm/checker.hpp"

namespace protofsm::checker::detail {

inline constexpr std::uint8_t kMonitorInit = 255;

struct CompiledProperty {
    enum class Shape { bad_state, trap, lasso };
    Shape shape = Shape::bad_state;
    std::function<bool(const Configuration&)> bad;
    std::array<bool, 2> frozen_peers{false, false};
    // Monitor successors after entering a configuration; kMonitorInit for the first one.
    std::function<std::vector<std::uint8_t>(std::uint8_t, const Configuration&)> step;
    std::function<bool(const Configuration&)> accepting;
    std::function<bool(const Configuration&)> trigger;  // empty: never vacuous
    bool trigger_needs_cycle = false;
};

CompiledProperty compile(PropertyId id, const System& sys);

std::vector<std::uint8_t> monitor_step(const CompiledProperty& p, std::uint8_t m, const Configuration& c);

struct Edge {
    int to;
    Move move;  // move.next is unused here; `to` is authoritative
};

/// Explicit graph over faithful (daisy-exited) product configurations.
struct Graph {
    std::vector<Configuration> nodes;
    std::vector<std::vector<Edge>> succ;
    std::unordered_map<Configuration, int, ConfigurationHash> index;
    std::vector<int> parent;  // BFS tree, -1 for seeds
    std::vector<int> parent_edge;
};

/// Breadth-first exploration of the faithful product from `seeds`. Deadlocked
/// configurations get a stutter self-loop (Move::Kind::exit with peer -2).
Graph explore(const System& sys, const CompiledProperty& prop, const std::vector<Configuration>& seeds,
              std::size_t max_states);

/// Nodes that witness a violation by themselves: bad states, members of
/// accepting cycles, or trapped configurations.
std::vector<bool> violating_nodes(const System& sys, const CompiledProperty& prop, const Graph& g);

/// Nodes from which some violating node is reachable.
std::vector<bool> can_reach(const Graph& g, const std::vector<bool>& targets);

/// Product successors of a faithful configuration (monitor applied).
std::vector<Move> product_moves(const System& sys, const CompiledProperty& prop, const Configuration& c);

std::string describe_move(const System& sys, const Move& m);

/// Fills `v.counterexample` with the BFS-tree path to `node`, followed by a
/// cycle back to it for lasso-shaped properties.
void witness(const System& sys, const CompiledProperty& prop, const Graph& g, int node, Verdict& v);

/// Seeds of the unattacked product.
std::vector<Configuration> initial_nodes(const System& sys, const CompiledProperty& prop);

}  // namespace protofsm::checker::detail

#include <algorithm>
#include <deque>

#include "detail.hpp"

namespace protofsm::checker::detail {

std::vector<Configuration> initial_nodes(const System& sys, const CompiledProperty& prop) {
    std::vector<Configuration> out;
    Configuration c = sys.initial();
    for (auto m : monitor_step(prop, kMonitorInit, c)) {
        c.monitor = m;
        out.push_back(c);
    }
    return out;
}

std::vector<Move> product_moves(const System& sys, const CompiledProperty& prop, const Configuration& c) {
    std::vector<Move> out;
    auto peer = sys.peer_moves(c);
    if (peer.empty()) {
        auto ms = monitor_step(prop, c.monitor, c);
        if (std::find(ms.begin(), ms.end(), c.monitor) != ms.end()) out.push_back({Move::Kind::exit, -2, -1, -1, c});
        return out;
    }
    for (auto& mv : peer) {
        for (auto m : monitor_step(prop, c.monitor, mv.next)) {
            Move copy = mv;
            copy.next.monitor = m;
            out.push_back(copy);
        }
    }
    return out;
}

std::string describe_move(const System& sys, const Move& m) {
    switch (m.kind) {
        case Move::Kind::peer:
        case Move::Kind::timeout: {
            const auto& t = sys.fsm().transitions.at(m.transition);
            return "peer" + std::to_string(m.peer + 1) + ": " + t.from + " --" + t.label.to_string() + "--> " + t.to;
        }
        case Move::Kind::discard:
            return "peer" + std::to_string(m.peer + 1) + ": discard " + sys.messages().at(m.message);
        case Move::Kind::inject: return "daisy: inject " + sys.messages().at(m.message) + " to peer" + std::to_string(m.peer + 1);
        case Move::Kind::drop: return "daisy: drop " + sys.messages().at(m.message) + " to peer" + std::to_string(m.peer + 1);
        case Move::Kind::exit: return m.peer == -2 ? "stutter" : "daisy: exit";
    }
    return {};
}

Graph explore(const System& sys, const CompiledProperty& prop, const std::vector<Configuration>& seeds,
              std::size_t max_states) {
    Graph g;
    std::deque<int> frontier;
    auto intern = [&](const Configuration& c, int parent, int edge) {
        auto [it, fresh] = g.index.try_emplace(c, static_cast<int>(g.nodes.size()));
        if (fresh) {
            if (g.nodes.size() >= max_states) throw StateSpaceExceeded(max_states);
            g.nodes.push_back(c);
            g.succ.emplace_back();
            g.parent.push_back(parent);
            g.parent_edge.push_back(edge);
            frontier.push_back(it->second);
        }
        return it->second;
    };
    for (const auto& s : seeds) intern(s, -1, -1);
    while (!frontier.empty()) {
        int n = frontier.front();
        frontier.pop_front();
        auto moves = product_moves(sys, prop, g.nodes[n]);
        for (auto& mv : moves) {
            int edge = static_cast<int>(g.succ[n].size());
            int to = intern(mv.next, n, edge);
            g.succ[n].push_back({to, std::move(mv)});
        }
    }
    return g;
}

namespace {

// Iterative Tarjan; returns component id per node and whether each component is cyclic.
std::pair<std::vector<int>, std::vector<bool>> components(const Graph& g) {
    const int n = static_cast<int>(g.nodes.size());
    std::vector<int> idx(n, -1), low(n, 0), comp(n, -1);
    std::vector<bool> on(n, false);
    std::vector<int> stack;
    std::vector<bool> cyclic;
    int counter = 0;
    struct Frame {
        int v;
        std::size_t next;
    };
    for (int root = 0; root < n; ++root) {
        if (idx[root] >= 0) continue;
        std::vector<Frame> call{{root, 0}};
        idx[root] = low[root] = counter++;
        stack.push_back(root);
        on[root] = true;
        while (!call.empty()) {
            auto& f = call.back();
            if (f.next < g.succ[f.v].size()) {
                int w = g.succ[f.v][f.next++].to;
                if (idx[w] < 0) {
                    idx[w] = low[w] = counter++;
                    stack.push_back(w);
                    on[w] = true;
                    call.push_back({w, 0});
                } else if (on[w]) {
                    low[f.v] = std::min(low[f.v], idx[w]);
                }
                continue;
            }
            int v = f.v;
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            if (low[v] != idx[v]) continue;
            int id = static_cast<int>(cyclic.size());
            std::size_t size = 0;
            int w;
            do {
                w = stack.back();
                stack.pop_back();
                on[w] = false;
                comp[w] = id;
                ++size;
            } while (w != v);
            bool self = std::any_of(g.succ[v].begin(), g.succ[v].end(), [v](const Edge& e) { return e.to == v; });
            cyclic.push_back(size > 1 || self);
        }
    }
    return {comp, cyclic};
}

}  // namespace

std::vector<bool> violating_nodes(const System& sys, const CompiledProperty& prop, const Graph& g) {
    const std::size_t n = g.nodes.size();
    std::vector<bool> out(n, false);
    using S = CompiledProperty::Shape;
    if (prop.shape == S::bad_state) {
        for (std::size_t i = 0; i < n; ++i) out[i] = prop.bad(g.nodes[i]);
    } else if (prop.shape == S::lasso) {
        auto [comp, cyclic] = components(g);
        for (std::size_t i = 0; i < n; ++i) out[i] = cyclic[comp[i]] && prop.accepting(g.nodes[i]);
    } else {
        // Greatest fixpoint: a node stays frozen while every successor keeps the
        // watched peers in place and is itself frozen.
        std::vector<bool> frozen(n, true);
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t i = 0; i < n; ++i) {
                if (!frozen[i]) continue;
                for (const auto& e : g.succ[i]) {
                    bool moved = false;
                    for (int p = 0; p < 2; ++p)
                        if (prop.frozen_peers[p] && g.nodes[e.to].state[p] != g.nodes[i].state[p]) moved = true;
                    if (moved || !frozen[e.to]) {
                        frozen[i] = false;
                        changed = true;
                        break;
                    }
                }
            }
        }
        out = frozen;
    }
    (void)sys;
    return out;
}

std::vector<bool> can_reach(const Graph& g, const std::vector<bool>& targets) {
    const std::size_t n = g.nodes.size();
    std::vector<std::vector<int>> pred(n);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& e : g.succ[i]) pred[e.to].push_back(static_cast<int>(i));
    std::vector<bool> out = targets;
    std::deque<int> work;
    for (std::size_t i = 0; i < n; ++i)
        if (out[i]) work.push_back(static_cast<int>(i));
    while (!work.empty()) {
        int v = work.front();
        work.pop_front();
        for (int p : pred[v])
            if (!out[p]) {
                out[p] = true;
                work.push_back(p);
            }
    }
    return out;
}

namespace {

std::vector<TraceStep> path_to(const System& sys, const Graph& g, int node) {
    std::vector<TraceStep> rev;
    for (int v = node; v >= 0; v = g.parent[v]) {
        int p = g.parent[v];
        std::string action = p < 0 ? "init" : describe_move(sys, g.succ[p][g.parent_edge[v]].move);
        rev.push_back({std::move(action), g.nodes[v]});
    }
    std::reverse(rev.begin(), rev.end());
    return rev;
}

// Shortest non-empty path from `v` back to itself.
std::vector<TraceStep> cycle_from(const System& sys, const Graph& g, int v) {
    std::vector<int> from(g.nodes.size(), -1), via(g.nodes.size(), -1);
    std::deque<int> work{v};
    std::vector<bool> seen(g.nodes.size(), false);
    while (!work.empty()) {
        int u = work.front();
        work.pop_front();
        for (std::size_t k = 0; k < g.succ[u].size(); ++k) {
            int w = g.succ[u][k].to;
            if (w == v) {
                std::vector<TraceStep> rev{{describe_move(sys, g.succ[u][k].move), g.nodes[v]}};
                for (int x = u; x != v; x = from[x])
                    rev.push_back({describe_move(sys, g.succ[from[x]][via[x]].move), g.nodes[x]});
                std::reverse(rev.begin(), rev.end());
                return rev;
            }
            if (!seen[w]) {
                seen[w] = true;
                from[w] = u;
                via[w] = static_cast<int>(k);
                work.push_back(w);
            }
        }
    }
    return {};
}

}  // namespace

void witness(const System& sys, const CompiledProperty& prop, const Graph& g, int node, Verdict& v) {
    v.counterexample = path_to(sys, g, node);
    v.lasso_start = v.counterexample.size() - 1;
    if (prop.shape == CompiledProperty::Shape::lasso) {
        auto loop = cycle_from(sys, g, node);
        v.counterexample.insert(v.counterexample.end(), loop.begin(), loop.end());
    }
}

}  // namespace protofsm::checker::detail

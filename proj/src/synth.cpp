#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <unordered_set>

#include "detail.hpp"

namespace protofsm::checker {

namespace {

using detail::CompiledProperty;

// Monitor-aware successors of a configuration while the gadget is in control.
std::vector<Move> active_moves(const System& sys, const DaisyGadget& daisy, const CompiledProperty& prop,
                               const Configuration& c) {
    std::vector<Move> raw = sys.peer_moves(c);
    auto gadget = daisy.moves(sys, c);
    raw.insert(raw.end(), gadget.begin(), gadget.end());
    std::vector<Move> out;
    for (auto& mv : raw) {
        for (auto m : detail::monitor_step(prop, c.monitor, mv.next)) {
            Move copy = mv;
            copy.next.monitor = m;
            out.push_back(copy);
        }
    }
    return out;
}

bool is_daisy(const Move& m) { return m.kind == Move::Kind::inject || m.kind == Move::Kind::drop; }

// Whether any of `seeds` (faithful configurations) can reach a violation.
std::vector<bool> seeds_violate(const System& sys, const CompiledProperty& prop, const std::vector<Configuration>& seeds,
                                std::size_t max_states) {
    auto g = detail::explore(sys, prop, seeds, max_states);
    auto reach = detail::can_reach(g, detail::violating_nodes(sys, prop, g));
    std::vector<bool> out;
    out.reserve(seeds.size());
    for (const auto& s : seeds) out.push_back(reach[g.index.at(s)]);
    return out;
}

}  // namespace

SynthesisResult synthesize(const Fsm& model, std::string_view model_name, PropertyId id, const Bounds& bounds) {
    SynthesisResult result;
    result.support = check(model, id, bounds);
    if (!result.support.holds) {
        result.note = "unsupported";
        return result;
    }
    if (result.support.vacuous) {
        result.note = "vacuous";
        return result;
    }

    System sys(model, bounds.channel_capacity);
    auto prop = detail::compile(id, sys);
    DaisyGadget daisy(sys.messages());

    // 0-1 breadth-first search: gadget actions cost one, peer moves are free.
    std::vector<Configuration> nodes;
    std::vector<int> dist, parent;
    std::vector<Move> via;
    std::unordered_map<Configuration, int, ConfigurationHash> index;
    std::deque<int> work;
    auto relax = [&](const Configuration& c, int d, int from, const Move* mv, bool front) {
        auto [it, fresh] = index.try_emplace(c, static_cast<int>(nodes.size()));
        int n = it->second;
        if (fresh) {
            if (nodes.size() >= bounds.max_states) throw StateSpaceExceeded(bounds.max_states);
            nodes.push_back(c);
            dist.push_back(d);
            parent.push_back(from);
            via.push_back(mv ? *mv : Move{});
        } else if (d < dist[n]) {
            dist[n] = d;
            parent[n] = from;
            via[n] = mv ? *mv : Move{};
        } else {
            return;
        }
        front ? work.push_front(n) : work.push_back(n);
    };
    for (auto c : detail::initial_nodes(sys, prop)) {
        c.mode = DaisyMode::active;
        relax(c, 0, -1, nullptr, false);
    }

    std::vector<Configuration> exits;
    std::vector<int> exit_from;
    std::unordered_set<Configuration, ConfigurationHash> seen_exit;
    std::vector<bool> done;
    while (!work.empty()) {
        int n = work.front();
        work.pop_front();
        if (done.size() <= static_cast<std::size_t>(n)) done.resize(nodes.size(), false);
        if (done[n]) continue;
        done[n] = true;
        auto c = nodes[n];
        for (const auto& mv : active_moves(sys, daisy, prop, c)) {
            if (mv.kind == Move::Kind::exit) {
                if (seen_exit.insert(mv.next).second) {
                    exits.push_back(mv.next);
                    exit_from.push_back(n);
                }
                continue;
            }
            int cost = is_daisy(mv) ? 1 : 0;
            if (dist[n] + cost > bounds.max_daisy_steps) continue;
            relax(mv.next, dist[n] + cost, n, &mv, cost == 0);
        }
        if (done.size() < nodes.size()) done.resize(nodes.size(), false);
    }

    auto violates = seeds_violate(sys, prop, exits, bounds.max_states);
    std::set<std::vector<std::string>> scripts;
    for (std::size_t k = 0; k < exits.size() && result.attackers.size() < bounds.max_attackers; ++k) {
        if (!violates[k]) continue;
        std::vector<Move> path;
        for (int v = exit_from[k]; parent[v] >= 0; v = parent[v]) path.push_back(via[v]);
        std::reverse(path.begin(), path.end());
        path.push_back({Move::Kind::exit, -1, -1, -1, exits[k]});
        auto script = project(sys, path);
        std::vector<std::string> key;
        for (const auto& a : script) key.push_back(a.to_string());
        if (!scripts.insert(key).second) continue;
        Attacker a;
        a.script = std::move(script);
        a.provenance = {std::string(model_name), property(id).name, static_cast<int>(result.attackers.size()) + 1};
        result.attackers.push_back(std::move(a));
    }
    return result;
}

Verdict replay(const Attacker& attacker, const Fsm& canonical, PropertyId id, const Bounds& bounds) {
    System sys(canonical, bounds.channel_capacity);
    for (const auto& a : attacker.script)
        if (!a.msg.empty() && sys.message_index(a.msg) < 0)
            throw AlphabetMismatch("message '" + a.msg + "' is not in the canonical alphabet");
    auto prop = detail::compile(id, sys);

    // Script phase: the canonical system composed with the position inside the script.
    using Node = std::pair<Configuration, std::size_t>;
    struct NodeHash {
        std::size_t operator()(const Node& n) const noexcept { return n.first.hash() * 31 + n.second; }
    };
    std::unordered_map<Node, int, NodeHash> seen;
    std::vector<Node> nodes;
    std::vector<int> parent;
    std::vector<std::string> how;
    std::deque<int> work;
    std::vector<Configuration> exits;
    std::vector<int> exit_from;
    std::unordered_set<Configuration, ConfigurationHash> exit_seen;
    auto visit = [&](Node n, int from, std::string action) {
        if (n.first.mode == DaisyMode::exited) {
            if (exit_seen.insert(n.first).second) {
                exits.push_back(n.first);
                exit_from.push_back(from);
            }
            return;
        }
        if (!seen.try_emplace(n, static_cast<int>(nodes.size())).second) return;
        if (nodes.size() >= bounds.max_states) throw StateSpaceExceeded(bounds.max_states);
        work.push_back(static_cast<int>(nodes.size()));
        nodes.push_back(std::move(n));
        parent.push_back(from);
        how.push_back(std::move(action));
    };
    for (auto c : detail::initial_nodes(sys, prop)) {
        c.mode = DaisyMode::active;
        visit({c, 0}, -1, "init");
    }
    while (!work.empty()) {
        int at = work.front();
        work.pop_front();
        auto [c, pos] = nodes[at];
        std::vector<std::tuple<Configuration, std::size_t, std::string>> next;
        for (const auto& mv : sys.peer_moves(c)) next.emplace_back(mv.next, pos, detail::describe_move(sys, mv));
        Configuration n = c;
        if (pos < attacker.script.size()) {
            const auto& act = attacker.script[pos];
            bool ok = true;
            auto& q = n.queue[std::max(act.peer, 0)];
            auto& len = n.qlen[std::max(act.peer, 0)];
            switch (act.op) {
                case AttackAction::Op::inject:
                    ok = len < sys.capacity();
                    if (ok) q[len++] = static_cast<std::uint8_t>(sys.message_index(act.msg));
                    break;
                case AttackAction::Op::drop:
                    ok = len > 0 && (act.msg.empty() || q[0] == sys.message_index(act.msg));
                    if (ok) {
                        std::copy(q.begin() + 1, q.begin() + len, q.begin());
                        q[--len] = 0;
                    }
                    break;
                case AttackAction::Op::forward: break;
                case AttackAction::Op::exit: n.mode = DaisyMode::exited; break;
            }
            if (ok) next.emplace_back(n, pos + 1, "attacker: " + act.to_string());
        } else {
            n.mode = DaisyMode::exited;
            next.emplace_back(n, pos, "attacker: exit");
        }
        for (auto& [cfg, p, action] : next)
            for (auto m : detail::monitor_step(prop, c.monitor, cfg)) {
                cfg.monitor = m;
                visit({cfg, p}, at, action);
            }
    }

    Verdict v;
    if (exits.empty()) return v;
    auto g = detail::explore(sys, prop, exits, bounds.max_states);
    v.explored = nodes.size() + g.nodes.size();
    auto bad = detail::violating_nodes(sys, prop, g);
    auto it = std::find(bad.begin(), bad.end(), true);
    if (it == bad.end()) return v;
    v.holds = false;
    int node = static_cast<int>(it - bad.begin());
    detail::witness(sys, prop, g, node, v);
    // Splice the script phase in front of the faithful suffix.
    int seed = node;
    while (g.parent[seed] >= 0) seed = g.parent[seed];
    std::size_t k = std::find(exits.begin(), exits.end(), g.nodes[seed]) - exits.begin();
    std::vector<TraceStep> prefix;
    for (int at = exit_from[k]; at >= 0; at = parent[at]) prefix.push_back({how[at], nodes[at].first});
    std::reverse(prefix.begin(), prefix.end());
    v.counterexample.front().action = "attacker: exit";
    v.lasso_start += prefix.size();
    prefix.insert(prefix.end(), v.counterexample.begin(), v.counterexample.end());
    v.counterexample = std::move(prefix);
    return v;
}

bool confirm(const Attacker& attacker, const Fsm& canonical, PropertyId id, const Bounds& bounds) {
    return !replay(attacker, canonical, id, bounds).holds;
}

}  // namespace protofsm::checker

#include <algorithm>
#include <deque>

#include "detail.hpp"

namespace protofsm::checker {

using detail::CompiledProperty;

Verdict check(const Fsm& fsm, PropertyId id, const Bounds& bounds) {
    System sys(fsm, bounds.channel_capacity);
    auto prop = detail::compile(id, sys);
    Verdict v;
    v.vacuous = vacuous(fsm, id, bounds);
    auto g = detail::explore(sys, prop, detail::initial_nodes(sys, prop), bounds.max_states);
    v.explored = g.nodes.size();
    auto bad = detail::violating_nodes(sys, prop, g);
    auto it = std::find(bad.begin(), bad.end(), true);
    if (it == bad.end()) return v;
    v.holds = false;
    detail::witness(sys, prop, g, static_cast<int>(it - bad.begin()), v);
    return v;
}

bool vacuous(const Fsm& fsm, PropertyId id, const Bounds& bounds) {
    System sys(fsm, bounds.channel_capacity);
    auto prop = detail::compile(id, sys);
    if (!prop.trigger) return false;
    CompiledProperty plain;
    plain.shape = prop.trigger_needs_cycle ? CompiledProperty::Shape::lasso : CompiledProperty::Shape::bad_state;
    plain.bad = prop.trigger;
    plain.accepting = prop.trigger;
    plain.step = [](std::uint8_t, const Configuration&) { return std::vector<std::uint8_t>{0}; };
    auto g = detail::explore(sys, plain, detail::initial_nodes(sys, plain), bounds.max_states);
    auto hits = detail::violating_nodes(sys, plain, g);
    return std::none_of(hits.begin(), hits.end(), [](bool b) { return b; });
}

std::vector<std::vector<Verdict>> support_table(const std::vector<Fsm>& models, const std::vector<PropertyId>& props,
                                                const Bounds& bounds) {
    std::vector<std::vector<Verdict>> out;
    for (const auto& m : models) {
        auto& row = out.emplace_back();
        for (auto p : props) row.push_back(check(m, p, bounds));
    }
    return out;
}

}  // namespace protofsm::checker

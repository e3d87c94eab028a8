#include <algorithm>
#include <cctype>

#include "detail.hpp"

namespace protofsm::checker {

const std::vector<Property>& all_properties() {
    static const std::vector<Property> props = {
        {PropertyId::phi1, "phi1", "No half-open connections.", PropertyKind::safety},
        {PropertyId::phi2, "phi2", "Passive/active establishment eventually succeeds.", PropertyKind::liveness},
        {PropertyId::phi3, "phi3", "Peers don't get stuck.", PropertyKind::safety},
        {PropertyId::phi4, "phi4", "SYN_RECEIVED is eventually followed by ESTABLISHED, FIN_WAIT_1, or CLOSED.",
         PropertyKind::liveness},
        {PropertyId::theta1, "theta1", "The peers don't both loop into being stuck or infinitely looping.",
         PropertyKind::liveness},
        {PropertyId::theta2, "theta2", "The peers are never both in TIME_WAIT.", PropertyKind::safety},
        {PropertyId::theta3, "theta3", "The first peer doesn't loop into being stuck or infinitely looping.",
         PropertyKind::liveness},
        {PropertyId::theta4, "theta4", "The peers are never both in CLOSE_REQ.", PropertyKind::safety},
    };
    return props;
}

const Property& property(PropertyId id) { return all_properties().at(static_cast<std::size_t>(id)); }

std::optional<PropertyId> parse_property_id(std::string_view text) {
    std::string s(text);
    for (auto [from, to] : {std::pair<std::string, std::string>{"φ", "phi"}, {"θ", "theta"}})
        if (s.starts_with(from)) s = to + s.substr(from.size());
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const auto& p : all_properties())
        if (p.name == s) return p.id;
    return std::nullopt;
}

std::vector<PropertyId> tcp_properties() {
    return {PropertyId::phi1, PropertyId::phi2, PropertyId::phi3, PropertyId::phi4};
}

std::vector<PropertyId> dccp_properties() {
    return {PropertyId::theta1, PropertyId::theta2, PropertyId::theta3, PropertyId::theta4};
}

namespace detail {

namespace {

bool in(const Configuration& c, int peer, int state) { return state >= 0 && c.state[peer] == state; }

bool either(const Configuration& c, int state) { return in(c, 0, state) || in(c, 1, state); }

}  // namespace

CompiledProperty compile(PropertyId id, const System& sys) {
    CompiledProperty p;
    using S = CompiledProperty::Shape;
    switch (id) {
        case PropertyId::phi1: {
            // Half-open: one side believes the connection is up while the other
            // holds no synchronized connection at all.
            int est = sys.state_index("ESTABLISHED");
            std::array<int, 3> unsync = {sys.state_index("CLOSED"), sys.state_index("LISTEN"),
                                         sys.state_index("SYN_SENT")};
            p.shape = S::bad_state;
            p.bad = [=](const Configuration& c) {
                auto idle = [&](int peer) {
                    return std::any_of(unsync.begin(), unsync.end(), [&](int s) { return in(c, peer, s); });
                };
                return (in(c, 0, est) && idle(1)) || (in(c, 1, est) && idle(0));
            };
            p.trigger = [=](const Configuration& c) { return either(c, est); };
            break;
        }
        case PropertyId::phi2: {
            int est = sys.state_index("ESTABLISHED");
            int listen = sys.state_index("LISTEN");
            int sent = sys.state_index("SYN_SENT");
            p.shape = S::lasso;
            p.step = [=](std::uint8_t, const Configuration& c) {
                return in(c, 0, est) ? std::vector<std::uint8_t>{} : std::vector<std::uint8_t>{0};
            };
            p.accepting = [=](const Configuration& c) { return in(c, 0, listen) && in(c, 1, sent); };
            p.trigger = p.accepting;
            p.trigger_needs_cycle = true;
            break;
        }
        case PropertyId::phi3: {
            int closed = sys.state_index("CLOSED");
            p.shape = S::bad_state;
            p.bad = [&sys, closed](const Configuration& c) {
                return !(in(c, 0, closed) && in(c, 1, closed)) && sys.deadlocked(c);
            };
            break;
        }
        case PropertyId::phi4: {
            int rcvd = sys.state_index("SYN_RECEIVED");
            std::array<int, 3> done = {sys.state_index("ESTABLISHED"), sys.state_index("FIN_WAIT_1"),
                                       sys.state_index("CLOSED")};
            p.shape = S::lasso;
            // 0: idle, 1 + i: peer i entered SYN_RECEIVED and has not left toward a target yet
            p.step = [=](std::uint8_t m, const Configuration& c) {
                std::vector<std::uint8_t> out;
                if (m == kMonitorInit || m == 0) {
                    out.push_back(0);
                    for (int i = 0; i < 2; ++i)
                        if (in(c, i, rcvd)) out.push_back(static_cast<std::uint8_t>(1 + i));
                    return out;
                }
                int i = m - 1;
                bool finished = std::any_of(done.begin(), done.end(), [&](int s) { return in(c, i, s); });
                if (!finished) out.push_back(m);
                return out;
            };
            p.accepting = [](const Configuration& c) { return c.monitor != 0; };
            p.trigger = [=](const Configuration& c) { return either(c, rcvd); };
            break;
        }
        case PropertyId::theta1:
        case PropertyId::theta3: {
            p.shape = S::trap;
            p.frozen_peers = {true, id == PropertyId::theta1};
            std::vector<bool> looping(sys.fsm().states.size(), false);
            for (const auto& t : sys.fsm().transitions)
                if (t.from == t.to) looping[sys.state_index(t.from)] = true;
            p.trigger = [looping](const Configuration& c) { return looping[c.state[0]] || looping[c.state[1]]; };
            break;
        }
        case PropertyId::theta2:
        case PropertyId::theta4: {
            int s = sys.state_index(id == PropertyId::theta2 ? "TIME_WAIT" : "CLOSE_REQ");
            p.shape = S::bad_state;
            p.bad = [=](const Configuration& c) { return in(c, 0, s) && in(c, 1, s); };
            p.trigger = [=](const Configuration& c) { return either(c, s); };
            break;
        }
    }
    return p;
}

std::vector<std::uint8_t> monitor_step(const CompiledProperty& p, std::uint8_t m, const Configuration& c) {
    if (p.shape != CompiledProperty::Shape::lasso) return {0};
    return p.step(m, c);
}

}  // namespace detail
}  // namespace protofsm::checker

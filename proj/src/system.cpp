#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "protofsm/checker.hpp"

namespace protofsm::checker {

std::uint64_t Configuration::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint8_t b) {
        h ^= b;
        h *= 1099511628211ULL;
    };
    for (int i = 0; i < 2; ++i) {
        mix(state[i]);
        mix(flags[i]);
        mix(qlen[i]);
        for (int k = 0; k < qlen[i]; ++k) mix(queue[i][k]);
    }
    mix(static_cast<std::uint8_t>(mode));
    mix(monitor);
    return h;
}

namespace {

std::string fold_name(std::string_view s) {
    std::string out;
    for (char c : s)
        if (c != '_' && c != '-' && c != ' ') out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

void push(Configuration& c, int q, std::uint8_t msg) { c.queue[q][c.qlen[q]++] = msg; }

void pop(Configuration& c, int q) {
    std::copy(c.queue[q].begin() + 1, c.queue[q].begin() + c.qlen[q], c.queue[q].begin());
    --c.qlen[q];
    c.queue[q][c.qlen[q]] = 0;
}

}  // namespace

int natural_capacity(const Fsm& fsm) {
    int widest = 1;
    for (const auto& t : fsm.transitions) {
        int sends = 0;
        for (const auto& e : t.label.events) sends += e.dir == Direction::send;
        widest = std::max(widest, sends);
    }
    return std::min(widest, kMaxCapacity);
}

System::System(const Fsm& fsm, int capacity) : fsm_(fsm), capacity_(capacity) {
    fsm_.validate();
    if (capacity == 0) capacity = capacity_ = natural_capacity(fsm_);
    if (capacity < 1 || capacity > kMaxCapacity)
        throw std::invalid_argument("channel capacity must be within 1.." + std::to_string(kMaxCapacity));
    messages_ = fsm_.message_names();
    if (fsm_.states.size() > 255 || messages_.size() > 255) throw std::invalid_argument("model too large");
    std::set<std::string> flags;
    for (const auto& t : fsm_.transitions) {
        for (const auto& g : t.guard) flags.insert(g.var);
        for (const auto& a : t.assign) flags.insert(a.var);
    }
    if (flags.size() > 8) throw std::invalid_argument("at most 8 peer flags supported");
    flag_names_.assign(flags.begin(), flags.end());
    auto flag_bit = [this](const std::string& v) {
        return static_cast<std::uint8_t>(
            1u << (std::find(flag_names_.begin(), flag_names_.end(), v) - flag_names_.begin()));
    };

    by_state_.resize(fsm_.states.size());
    for (int i = 0; i < static_cast<int>(fsm_.transitions.size()); ++i) {
        const auto& t = fsm_.transitions[i];
        Compiled c{};
        c.index = i;
        c.to = static_cast<std::uint8_t>(state_index(t.to));
        c.timeout = t.label.is_timeout();
        for (const auto& e : t.label.events)
            c.ops.push_back({e.dir == Direction::receive, static_cast<std::uint8_t>(message_index(e.name))});
        for (const auto& g : t.guard) {
            c.guard_mask |= flag_bit(g.var);
            if (g.value) c.guard_value |= flag_bit(g.var);
        }
        for (const auto& a : t.assign) {
            c.assign_mask |= flag_bit(a.var);
            if (a.value) c.assign_value |= flag_bit(a.var);
        }
        by_state_[state_index(t.from)].push_back(std::move(c));
    }
}

Configuration System::initial() const {
    Configuration c;
    auto s0 = static_cast<std::uint8_t>(state_index(fsm_.initial));
    c.state = {s0, s0};
    return c;
}

int System::state_index(std::string_view name) const {
    auto it = std::find(fsm_.states.begin(), fsm_.states.end(), name);
    if (it != fsm_.states.end()) return static_cast<int>(it - fsm_.states.begin());
    auto folded = fold_name(name);
    for (std::size_t i = 0; i < fsm_.states.size(); ++i)
        if (fold_name(fsm_.states[i]) == folded) return static_cast<int>(i);
    return -1;
}

int System::message_index(std::string_view name) const {
    auto it = std::find(messages_.begin(), messages_.end(), name);
    return it == messages_.end() ? -1 : static_cast<int>(it - messages_.begin());
}

bool System::fire(const Compiled& t, int peer, const Configuration& c, Configuration& out) const {
    if ((c.flags[peer] & t.guard_mask) != t.guard_value) return false;
    out = c;
    const int in = peer;
    const int outq = 1 - peer;
    for (const auto& op : t.ops) {
        if (op.receive) {
            if (out.qlen[in] == 0 || out.queue[in][0] != op.msg) return false;
            pop(out, in);
        } else if (out.qlen[outq] < capacity_) {
            push(out, outq, op.msg);
        }  // a full channel loses the message
    }
    out.state[peer] = t.to;
    out.flags[peer] = static_cast<std::uint8_t>((out.flags[peer] & ~t.assign_mask) | t.assign_value);
    return true;
}

bool System::expects(int state, std::uint8_t msg) const {
    bool listens = false;
    for (const auto& t : by_state_[state]) {
        if (t.timeout) continue;
        if (t.ops.empty() || !t.ops.front().receive) continue;
        listens = true;
        if (t.ops.front().msg == msg) return true;
    }
    return !listens;
}

std::vector<Move> System::peer_moves(const Configuration& c) const {
    std::vector<Move> moves;
    Configuration next;
    bool progress = false;  // self-loops keep running but never hold back a timer
    for (int p = 0; p < 2; ++p)
        for (const auto& t : by_state_[c.state[p]])
            if (!t.timeout && fire(t, p, c, next)) {
                moves.push_back({Move::Kind::peer, p, t.index, -1, next});
                progress = progress || t.to != c.state[p];
            }
    for (int p = 0; p < 2; ++p) {
        if (c.qlen[p] == 0 || expects(c.state[p], c.queue[p][0])) continue;
        next = c;
        pop(next, p);
        moves.push_back({Move::Kind::discard, p, -1, c.queue[p][0], next});
        progress = true;
    }
    if (progress) return moves;
    for (int p = 0; p < 2; ++p)
        for (const auto& t : by_state_[c.state[p]])
            if (t.timeout && fire(t, p, c, next)) moves.push_back({Move::Kind::timeout, p, t.index, -1, next});
    return moves;
}

std::string System::describe(const Configuration& c) const {
    std::ostringstream out;
    for (int p = 0; p < 2; ++p) {
        if (p) out << " | ";
        out << state_name(c.state[p]);
        if (c.flags[p]) {
            out << '{';
            bool first = true;
            for (std::size_t b = 0; b < flag_names_.size(); ++b)
                if (c.flags[p] & (1u << b)) {
                    out << (first ? "" : ",") << flag_names_[b];
                    first = false;
                }
            out << '}';
        }
    }
    for (int q = 0; q < 2; ++q) {
        out << (q == 0 ? " | to1[" : " to2[");
        for (int k = 0; k < c.qlen[q]; ++k) out << (k ? "," : "") << messages_[c.queue[q][k]];
        out << ']';
    }
    if (c.mode == DaisyMode::active) out << " daisy";
    return out.str();
}

// An empty alphabet leaves the gadget only its exit and drop moves.
DaisyGadget::DaisyGadget(std::vector<std::string> alphabet) : alphabet_(std::move(alphabet)) {}

std::vector<Move> DaisyGadget::moves(const System& sys, const Configuration& c) const {
    std::vector<Move> out;
    if (c.mode != DaisyMode::active) return out;
    Configuration next = c;
    next.mode = DaisyMode::exited;
    out.push_back({Move::Kind::exit, -1, -1, -1, next});
    for (int q = 0; q < 2; ++q) {
        if (c.qlen[q] > 0) {
            next = c;
            pop(next, q);
            out.push_back({Move::Kind::drop, q, -1, c.queue[q][0], next});
        }
        if (c.qlen[q] < sys.capacity()) {
            for (const auto& m : alphabet_) {
                int idx = sys.message_index(m);
                if (idx < 0) continue;
                next = c;
                push(next, q, static_cast<std::uint8_t>(idx));
                out.push_back({Move::Kind::inject, q, -1, idx, next});
            }
        }
    }
    return out;
}

}  // namespace protofsm::checker

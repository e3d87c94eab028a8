#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "protofsm/fsm.hpp"

namespace protofsm::checker {

inline constexpr int kMaxCapacity = 4;

/// Widest burst of sends in a single label, at least 1 and at most kMaxCapacity.
int natural_capacity(const Fsm& fsm);

struct Bounds {
    int channel_capacity = 0;  // 0: natural_capacity of the model
    int max_daisy_steps = 8;
    std::size_t max_states = 1'000'000;
    std::size_t max_attackers = 100;
};

class StateSpaceExceeded : public std::runtime_error {
public:
    explicit StateSpaceExceeded(std::size_t bound)
        : std::runtime_error("state space exceeded bound of " + std::to_string(bound)), bound_(bound) {}
    std::size_t bound() const noexcept { return bound_; }

private:
    std::size_t bound_;
};

enum class DaisyMode : std::uint8_t { exited = 0, active = 1 };

/// Global configuration of P || channel || P. queue[i] holds the messages in
/// flight toward peer i, oldest first.
struct Configuration {
    std::array<std::uint8_t, 2> state{};
    std::array<std::uint8_t, 2> flags{};
    std::array<std::uint8_t, 2> qlen{};
    std::array<std::array<std::uint8_t, kMaxCapacity>, 2> queue{};
    DaisyMode mode = DaisyMode::exited;
    std::uint8_t monitor = 0;

    bool operator==(const Configuration&) const = default;
    std::uint64_t hash() const;
};

struct ConfigurationHash {
    std::size_t operator()(const Configuration& c) const noexcept { return c.hash(); }
};

struct Move {
    enum class Kind { peer, timeout, discard, inject, drop, exit };
    Kind kind = Kind::peer;
    int peer = 0;        // acting peer; for inject/drop the peer whose inbound queue is touched
    int transition = -1; // index into Fsm::transitions for peer/timeout moves
    int message = -1;    // inject/drop payload
    Configuration next;
};

/// Two symmetric instances of one Fsm joined by bounded FIFO channels.
///
/// A label fires atomically when its receives match the head of the peer's
/// inbound queue in order. Sends never block: a message sent into a full
/// channel is lost. A peer whose state listens for some message may discard
/// an inbound head that no transition of that state starts with. Timeout
/// labels are enabled only when nothing else can make progress; self-loops
/// do not count as progress.
class System {
public:
    System(const Fsm& fsm, int capacity = 0);

    const Fsm& fsm() const { return fsm_; }
    int capacity() const { return capacity_; }
    Configuration initial() const;

    /// Peer moves enabled in `c`, deterministic order.
    std::vector<Move> peer_moves(const Configuration& c) const;
    bool deadlocked(const Configuration& c) const { return peer_moves(c).empty(); }

    int state_index(std::string_view name) const;  // -1 when absent; ignores '_' and case
    int message_index(std::string_view name) const;
    const std::string& state_name(int idx) const { return fsm_.states.at(idx); }
    const std::vector<std::string>& messages() const { return messages_; }

    std::string describe(const Configuration& c) const;

private:
    struct Op {
        bool receive;
        std::uint8_t msg;
    };
    struct Compiled {
        int index;
        std::uint8_t to;
        bool timeout;
        std::vector<Op> ops;
        std::uint8_t guard_mask, guard_value, assign_mask, assign_value;
    };
    bool fire(const Compiled& t, int peer, const Configuration& c, Configuration& out) const;
    bool expects(int state, std::uint8_t msg) const;

    Fsm fsm_;
    int capacity_;
    std::vector<std::string> messages_;
    std::vector<std::string> flag_names_;
    std::vector<std::vector<Compiled>> by_state_;
};

/// The daisy gadget: a nondeterministic channel replacement that may inject
/// any alphabet message toward either peer, drop the oldest in-flight message
/// of either queue, or exit into faithful delivery.
class DaisyGadget {
public:
    explicit DaisyGadget(std::vector<std::string> alphabet);
    const std::vector<std::string>& alphabet() const { return alphabet_; }
    std::vector<Move> moves(const System& sys, const Configuration& c) const;

private:
    std::vector<std::string> alphabet_;
};

enum class PropertyId { phi1, phi2, phi3, phi4, theta1, theta2, theta3, theta4 };
enum class PropertyKind { safety, liveness };

struct Property {
    PropertyId id;
    std::string name;
    std::string description;
    PropertyKind kind;
};

const Property& property(PropertyId id);
const std::vector<Property>& all_properties();
std::optional<PropertyId> parse_property_id(std::string_view text);
std::vector<PropertyId> tcp_properties();
std::vector<PropertyId> dccp_properties();

struct TraceStep {
    std::string action;
    Configuration config;
};

struct Verdict {
    bool holds = true;
    bool vacuous = false;
    std::vector<TraceStep> counterexample;  // prefix, then the cycle for liveness
    std::size_t lasso_start = 0;            // index where the repeated part begins
    std::size_t explored = 0;
};

/// Checks the unattacked two-peer system: BFS for safety, nested DFS over the
/// monitor product for liveness.
Verdict check(const Fsm& fsm, PropertyId prop, const Bounds& bounds = {});

/// True when the property's triggering condition never arises.
bool vacuous(const Fsm& fsm, PropertyId prop, const Bounds& bounds = {});

std::vector<std::vector<Verdict>> support_table(const std::vector<Fsm>& models, const std::vector<PropertyId>& props,
                                                const Bounds& bounds = {});

struct AttackAction {
    enum class Op { inject, drop, forward, exit };
    Op op = Op::exit;
    std::string msg;  // inject only
    int peer = -1;    // inject: receiving peer; drop: peer whose inbound message is dropped

    bool operator==(const AttackAction&) const = default;
    std::string to_string() const;
};

struct Provenance {
    std::string model;
    std::string property;
    int index = 0;
};

struct Attacker {
    std::vector<AttackAction> script;
    Provenance provenance;

    std::string name() const;  // model.property.index
};

std::string to_json(const Attacker& a);
Attacker attacker_from_json(std::string_view text);
std::string trace_to_json_lines(const System& sys, const std::vector<TraceStep>& trace);

/// Projects the gadget's actions out of a trace of P || Daisy(Q).
std::vector<AttackAction> project(const System& sys, const std::vector<Move>& trace);

struct SynthesisResult {
    std::vector<Attacker> attackers;
    Verdict support;
    std::string note;  // "unsupported", "vacuous" or empty
};

SynthesisResult synthesize(const Fsm& model, std::string_view model_name, PropertyId prop, const Bounds& bounds = {});

class AlphabetMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs `attacker` as a channel script against `canonical`; a violated verdict
/// carries the attacked execution as its counterexample.
Verdict replay(const Attacker& attacker, const Fsm& canonical, PropertyId prop, const Bounds& bounds = {});

/// Replays `attacker` as a deterministic channel script against `canonical`
/// and reports whether some execution violates `prop` after the script ends.
bool confirm(const Attacker& attacker, const Fsm& canonical, PropertyId prop, const Bounds& bounds = {});

}  // namespace protofsm::checker

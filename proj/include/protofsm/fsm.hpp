#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace protofsm {

enum class Direction { receive, send };

/// One directed event on a transition label: `NAME?` or `NAME!`.
struct Event {
    std::string name;
    Direction dir = Direction::receive;

    std::string qualified() const;
    auto operator<=>(const Event&) const = default;
};

enum class LabelKind { epsilon, timeout, events };

/// A transition label: the empty label, the timeout label, or a nonempty
/// sequence of directed events.
struct Label {
    LabelKind kind = LabelKind::epsilon;
    std::vector<Event> events;

    static Label epsilon() { return {}; }
    static Label timeout() { return {LabelKind::timeout, {}}; }
    static Label of(std::vector<Event> evs);

    bool is_epsilon() const { return kind == LabelKind::epsilon; }
    bool is_timeout() const { return kind == LabelKind::timeout; }

    /// "eps", "timeout", or space separated events, e.g. "SYN? ACK!".
    std::string to_string() const;
    /// Inverse of to_string(); throws std::invalid_argument.
    static Label parse(std::string_view text);

    auto operator<=>(const Label&) const = default;
};

/// Boolean peer-local flag read by a guard or written by an assignment.
struct FlagValue {
    std::string var;
    bool value = true;
    auto operator<=>(const FlagValue&) const = default;
};

struct Transition {
    std::string from;
    std::string to;
    Label label;
    std::vector<FlagValue> guard;
    std::vector<FlagValue> assign;
    std::string comment;  // carries no semantics

    auto operator<=>(const Transition& o) const {
        return std::tie(from, to, label, guard, assign) <=> std::tie(o.from, o.to, o.label, o.guard, o.assign);
    }
    bool operator==(const Transition& o) const { return (*this <=> o) == 0; }
};

class FsmError : public std::runtime_error {
public:
    enum class Code { schema_violation, disjointness_violation, empty_fsm };
    FsmError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const noexcept { return code_; }

private:
    Code code_;
};

/// P = <S, I, O, s0, T>. Inputs and outputs hold direction-qualified event
/// names ("SYN?" in I, "SYN!" in O), which keeps I and O disjoint even when
/// one message name travels both ways.
struct Fsm {
    std::vector<std::string> states;
    std::set<std::string> inputs;
    std::set<std::string> outputs;
    std::string initial;
    std::vector<Transition> transitions;

    bool has_state(std::string_view s) const;
    /// Message names used on either side, sorted.
    std::vector<std::string> message_names() const;
    /// Throws FsmError when an invariant is broken.
    void validate() const;
    /// Sorts and deduplicates transitions.
    void normalize();

    bool operator==(const Fsm&) const = default;
};

/// True when `t` type-checks against the states and alphabet of `fsm`.
bool type_checks(const Transition& t, const Fsm& fsm);

std::string to_json(const Fsm& fsm);
Fsm fsm_from_json(std::string_view text);
Fsm load_fsm(const std::filesystem::path& path);
void save_fsm(const Fsm& fsm, const std::filesystem::path& path);

/// Deterministic GraphViz rendering.
std::string to_dot(const Fsm& fsm, std::string_view graph_name = "fsm");

}  // namespace protofsm

#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "protofsm/fsm.hpp"
#include "protofsm/ir.hpp"

namespace protofsm::extract {

class ExtractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A candidate edge before pruning. Empty `from`/`to` means unresolved.
struct PotentialTransition {
    std::string from;
    std::string to;
    Label label;
    std::string provenance;  // node path of the transition block
    bool disjunctive = false;

    Transition as_transition() const { return {from, to, label, {}, {}, {}}; }
};

/// Decisions taken for one transition block, for debugging.
struct TraceEntry {
    std::string block;
    std::vector<std::string> explicit_from;
    std::string explicit_to;
    std::vector<std::string> inter;
    std::vector<std::string> outer;
    std::string label;
    int hops = 0;
    bool brk = false;
    bool disjunctive = false;
    std::vector<std::string> emitted;
};

/// State/event identifier derived from a definition's surface text:
/// normalized, with spaces folded into '_'.
std::string symbol(std::string_view surface);

/// Throws ExtractError when the document defines no states.
std::pair<std::vector<std::string>, std::string> extract_states(const ir::Document& doc);

/// Direction-qualified inputs ("X?") and outputs ("X!").
std::pair<std::set<std::string>, std::set<std::string>> extract_alphabet(const ir::Document& doc);

std::vector<PotentialTransition> extract_transitions(const ir::Document& doc, const std::vector<std::string>& states,
                                                     const std::set<std::string>& inputs, const std::set<std::string>& outputs,
                                                     std::vector<TraceEntry>* trace = nullptr);

/// Type check, call-and-response, then redundant epsilons. Output is a
/// sorted, duplicate-free subset of the input.
std::vector<Transition> prune(const std::vector<Transition>& candidates, const std::vector<std::string>& states,
                              const std::set<std::string>& inputs, const std::set<std::string>& outputs);

Fsm build_fsm(const ir::Document& doc, std::vector<TraceEntry>* trace = nullptr);

std::string trace_to_json_lines(const std::vector<TraceEntry>& trace);

}  // namespace protofsm::extract

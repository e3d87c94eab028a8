#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "protofsm/fsm.hpp"
#include "protofsm/ir.hpp"
#include "protofsm/tagger.hpp"

namespace protofsm::eval {

class EvalError : public std::runtime_error {
public:
    enum class Code { length_mismatch, source_mismatch };
    EvalError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const noexcept { return code_; }

private:
    Code code_;
};

struct TokenMetrics {
    double accuracy = 0;
    double weighted_f1 = 0;
    double macro_f1 = 0;
    std::map<std::string, double> per_label_f1;
};

/// Throws EvalError(length_mismatch) on sequences of different length.
TokenMetrics token_metrics(const std::vector<std::string>& pred, const std::vector<std::string>& gold);

/// BIO label of each phrase: the tagged block covering its first visible
/// character, B on the first phrase inside that block.
std::vector<tagger::Label> phrase_labels(const ir::Document& doc, const std::vector<tagger::Phrase>& phrases);

/// A labelled block with whitespace trimmed from both ends.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string type;
    bool operator==(const Span&) const = default;
};

std::vector<Span> tagged_spans(const ir::Document& doc);

struct ModeScore {
    int correct = 0, incorrect = 0, partial = 0, missing = 0, spurious = 0;

    int possible() const { return correct + incorrect + partial + missing; }
    int actual() const { return correct + incorrect + partial + spurious; }
    /// `partial_credit` is 0.5 in the partial and type modes, 0 elsewhere.
    double precision(double partial_credit) const;
    double recall(double partial_credit) const;
    double f1(double partial_credit) const;
};

struct SpanScore {
    ModeScore strict, exact, partial, type;
};

SpanScore span_metrics(const std::vector<Span>& pred, const std::vector<Span>& gold);
/// Throws EvalError(source_mismatch) unless both documents share plain text.
SpanScore span_metrics(const ir::Document& pred, const ir::Document& gold);

struct TransitionReport {
    int canonical_count = 0;
    int extracted_count = 0;
    int correct = 0;
    int partially_correct = 0;
    int incorrect = 0;
    int not_found = 0;
    std::vector<std::pair<Transition, Transition>> correct_pairs;  // extracted, canonical
    std::vector<std::pair<Transition, Transition>> partial_pairs;
    std::vector<Transition> incorrect_list;
    std::vector<Transition> not_found_list;
};

/// One-to-one matching: as many Correct pairs as possible, then as many
/// Partial pairs among what is left.
TransitionReport transition_compare(const Fsm& extracted, const Fsm& canonical);

std::string report_json(const SpanScore* spans, const TokenMetrics* tokens, const TransitionReport* transitions);
std::string transition_table(const TransitionReport& r, const std::string& row_name);

}  // namespace protofsm::eval

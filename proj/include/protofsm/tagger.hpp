#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "protofsm/ir.hpp"

namespace protofsm::tagger {

/// Word lists driving segmentation and the rule cascade, keyed by category
/// (transition_verb, send_verb, source_prep, conditional, ...).
class Lexicon {
public:
    /// Lines of `category<TAB>word`; '#' starts a comment.
    static Lexicon parse(std::string_view text);
    static Lexicon load(const std::string& path);
    /// The shipped default word lists.
    static const Lexicon& builtin();

    void add(const std::string& category, const std::string& word);
    bool has(std::string_view category, std::string_view word) const;
    /// Like has() but also accepts simple inflections (s, es, ed, ing).
    bool matches(std::string_view category, std::string_view word) const;
    const std::set<std::string>& words(std::string_view category) const;

private:
    std::map<std::string, std::set<std::string>, std::less<>> words_;
};

/// Suffix-stripped candidates of a lowercase word, the word itself first.
std::vector<std::string> stems(std::string_view word);

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool operator==(const Span&) const = default;
};

struct Phrase {
    std::string text;
    Span span;
    int indent = 0;
    int line_no = 0;   // 1-based line of the first character
    bool paragraph_start = false;  // preceded by a blank line
};

enum class TagType { trigger, action, transition, variable, timer, error };
std::string_view tag_type_name(TagType t);
std::optional<TagType> tag_type_from(std::string_view name);

enum class Bio { O, B, I };

struct Label {
    Bio bio = Bio::O;
    TagType type = TagType::trigger;  // ignored when bio == O

    static Label outside() { return {}; }
    static Label begin(TagType t) { return {Bio::B, t}; }
    static Label inside(TagType t) { return {Bio::I, t}; }
    /// "O", "B-trigger", ...
    std::string to_string() const;
    static Label parse(std::string_view s);
    bool operator==(const Label&) const = default;
};

enum class ArgRole { arg, arg_source, arg_target, arg_inter };
std::string_view arg_role_tag(ArgRole r);

struct AttachedArg {
    Span span;
    ArgRole role = ArgRole::arg;
};

enum class ActionType { send, receive, issue };

struct LabeledPhrase {
    Phrase phrase;
    Label label;
    std::optional<ActionType> action_type;
    std::vector<AttachedArg> attached_args;
    bool no_verb = false;  // classify_action found no verb and defaulted to issue
};

/// A dictionary mention inside the source text.
struct Mention {
    Span span;
    ir::EntryKind kind = ir::EntryKind::state;
    int id = -1;
};

/// Splits on sentence periods, ':' ';', hard line breaks, and before the
/// conditional words. A conditional phrase also ends after its first
/// top-level comma, which stays in the phrase.
std::vector<Phrase> segment_phrases(std::string_view text, const Lexicon& lex = Lexicon::builtin());

/// Dictionary mentions inside [span.begin, span.end) of `text`, longest
/// match first, non-overlapping.
std::vector<Mention> find_mentions(std::string_view text, Span span, const ir::Dictionary& dict);

std::vector<LabeledPhrase> rule_tag(const std::vector<Phrase>& phrases, std::string_view source, const ir::Dictionary& dict,
                                    const Lexicon& lex = Lexicon::builtin());

LabeledPhrase classify_action(LabeledPhrase labeled, std::string_view source, const Lexicon& lex = Lexicon::builtin());
LabeledPhrase attach_transition_args(LabeledPhrase labeled, std::string_view source, const ir::Dictionary& dict,
                                     const Lexicon& lex = Lexicon::builtin());

/// Builds the IR tree. Plain text of the result equals `source`.
ir::Document emit_ir(const std::vector<LabeledPhrase>& labeled, std::string_view source, const ir::Dictionary& dict,
                     const Lexicon& lex = Lexicon::builtin());

/// True when no I-x follows O or a label of another type.
bool bio_consistent(const std::vector<Label>& labels);

/// Reads a seed dictionary: lines `state<TAB>NAME`, `event<TAB>NAME` or
/// `variable<TAB>NAME`; ids count up per kind in file order.
ir::Dictionary load_seed_dictionary(const std::string& path);

}  // namespace protofsm::tagger

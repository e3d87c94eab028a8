#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace protofsm::ir {

enum class NodeKind {
    text,
    control,
    trigger,
    action,
    transition,
    variable,
    timer,
    error,
    def_state,
    def_event,
    def_var,
    ref_state,
    ref_event,
    arg,
    arg_source,
    arg_target,
    arg_inter,
};

std::string_view kind_name(NodeKind k);
/// Accepts every tag of the vocabulary plus the long spelling `arg_intermediate`.
std::optional<NodeKind> kind_from_tag(std::string_view tag);

enum class EventType { send, receive, compute };
std::string_view event_type_name(EventType t);

/// One element or text run. Offsets index the document's plain text, which
/// is the concatenation of every text run with markup removed.
struct Node {
    NodeKind kind = NodeKind::text;
    std::string tag;  // spelling as written, kept for serialization
    std::vector<std::pair<std::string, std::string>> attrs;  // document order
    std::vector<Node> children;
    std::string text;  // text runs only
    std::size_t begin = 0;
    std::size_t end = 0;
    int line = 0;

    const std::string* attr(std::string_view name) const;
    bool is_element() const { return kind != NodeKind::text; }
    /// Element children only, skipping text runs.
    std::vector<const Node*> elements() const;
    /// `relevant` on controls; absent means true.
    bool relevant() const;
    /// Numeric `id`; nullopt when absent or malformed.
    std::optional<int> id() const;
};

struct StateDef {
    int sid = 0;
    std::string name;
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct EventDef {
    int eid = 0;
    std::string name;
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct Document {
    std::string source_name;
    std::vector<Node> blocks;
    std::vector<StateDef> def_states;
    std::vector<EventDef> def_events;
    std::vector<std::string> def_vars;
    std::string plain_text;

    const StateDef* state(int sid) const;
    const EventDef* event(int eid) const;
    /// Substring of the plain text covered by `n`.
    std::string_view span(const Node& n) const { return std::string_view(plain_text).substr(n.begin, n.end - n.begin); }
};

/// Resolved type of a `ref_event`: explicit attribute, else the enclosing
/// action's type (`issue` maps to compute), else compute.
EventType ref_event_type(const Node& ref, const Node* enclosing_action);

struct Violation {
    std::string rule;  // IllegalNesting, UnresolvedReference, MissingAttribute, DuplicateId, InvalidAttribute
    std::string path;  // e.g. "/control[2]/transition[0]"
    std::string message;
    int line = 0;
};

class IrError : public std::runtime_error {
public:
    enum class Code { malformed, unknown_tag, unresolved_reference, illegal_nesting, missing_attribute, duplicate_id, invalid_attribute };
    IrError(Code code, const std::string& what, int line) : std::runtime_error(what), code_(code), line_(line) {}
    Code code() const noexcept { return code_; }
    int line() const noexcept { return line_; }

private:
    Code code_;
    int line_;
};

/// Parses an annotation fragment (no single root element is required).
/// Throws IrError on malformed markup, unknown tags, or the first
/// grammar violation.
Document parse_ir(std::string_view text, std::string source_name = {});
Document load_ir(const std::string& path);

std::vector<Violation> validate_ir(const Document& doc);

/// Inverse of parse_ir for documents it produced.
std::string serialize_ir(const Document& doc);

/// Uppercase, trim punctuation, collapse whitespace, fold '-' into '_'.
std::string normalize_name(std::string_view name);

enum class EntryKind { state, event, variable };

struct DictEntry {
    EntryKind kind = EntryKind::state;
    int id = -1;  // -1 for variables
    std::string name;  // surface form as defined
    std::optional<EventType> direction;  // events: first referenced type
};

class Dictionary {
public:
    void add(DictEntry e);
    /// Case-insensitive lookup on the normalized name.
    const DictEntry* lookup(std::string_view name) const;
    const std::map<std::string, DictEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, DictEntry> entries_;
};

Dictionary def_dictionary(const Document& doc);

}  // namespace protofsm::ir

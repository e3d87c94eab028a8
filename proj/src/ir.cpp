#include "protofsm/ir.hpp"

#include <expat.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace protofsm::ir {

namespace {

struct TagInfo {
    std::string_view tag;
    NodeKind kind;
};

constexpr TagInfo kTags[] = {
    {"control", NodeKind::control},       {"trigger", NodeKind::trigger},
    {"action", NodeKind::action},         {"transition", NodeKind::transition},
    {"variable", NodeKind::variable},     {"timer", NodeKind::timer},
    {"error", NodeKind::error},           {"def_state", NodeKind::def_state},
    {"def_event", NodeKind::def_event},   {"def_var", NodeKind::def_var},
    {"ref_state", NodeKind::ref_state},   {"ref_event", NodeKind::ref_event},
    {"arg", NodeKind::arg},               {"arg_source", NodeKind::arg_source},
    {"arg_target", NodeKind::arg_target}, {"arg_inter", NodeKind::arg_inter},
    {"arg_intermediate", NodeKind::arg_inter},
};

constexpr std::string_view kRootTag = "protofsm-ir-root";

struct Builder {
    XML_Parser parser = nullptr;
    std::vector<Node*> stack;
    std::string plain;
    std::string error;
    IrError::Code code = IrError::Code::malformed;
    int error_line = 0;
    bool seen_root = false;

    void fail(IrError::Code c, std::string msg) {
        if (error.empty()) {
            code = c;
            error = std::move(msg);
            error_line = static_cast<int>(XML_GetCurrentLineNumber(parser));
        }
        XML_StopParser(parser, XML_FALSE);
    }
};

void XMLCALL on_start(void* ud, const XML_Char* name, const XML_Char** atts) {
    auto* b = static_cast<Builder*>(ud);
    if (!b->seen_root) {
        b->seen_root = true;
        return;
    }
    auto kind = kind_from_tag(name);
    if (!kind) {
        b->fail(IrError::Code::unknown_tag, std::string("UnknownTag: <") + name + ">");
        return;
    }
    Node n;
    n.kind = *kind;
    n.tag = name;
    n.line = static_cast<int>(XML_GetCurrentLineNumber(b->parser));
    n.begin = b->plain.size();
    for (int i = 0; atts[i]; i += 2) n.attrs.emplace_back(atts[i], atts[i + 1]);
    auto& kids = b->stack.back()->children;
    kids.push_back(std::move(n));
    b->stack.push_back(&kids.back());
}

void XMLCALL on_end(void* ud, const XML_Char*) {
    auto* b = static_cast<Builder*>(ud);
    if (b->stack.size() <= 1) return;
    b->stack.back()->end = b->plain.size();
    b->stack.pop_back();
}

void XMLCALL on_text(void* ud, const XML_Char* s, int len) {
    auto* b = static_cast<Builder*>(ud);
    auto& kids = b->stack.back()->children;
    if (kids.empty() || kids.back().kind != NodeKind::text) {
        Node t;
        t.begin = b->plain.size();
        t.line = static_cast<int>(XML_GetCurrentLineNumber(b->parser));
        kids.push_back(std::move(t));
    }
    kids.back().text.append(s, static_cast<std::size_t>(len));
    b->plain.append(s, static_cast<std::size_t>(len));
    kids.back().end = b->plain.size();
}

std::string_view strip_declaration(std::string_view text) {
    auto p = text.find_first_not_of(" \t\r\n");
    if (p != std::string_view::npos && text.substr(p, 5) == "<?xml") {
        auto q = text.find("?>", p);
        if (q != std::string_view::npos) return text.substr(q + 2);
    }
    return text;
}

void collect_defs(const Node& n, Document& doc) {
    if (n.kind == NodeKind::def_state || n.kind == NodeKind::def_event || n.kind == NodeKind::def_var) {
        std::string name(doc.span(n));
        if (n.kind == NodeKind::def_var) {
            doc.def_vars.push_back(name);
        } else if (auto id = n.id()) {
            if (n.kind == NodeKind::def_state)
                doc.def_states.push_back({*id, name, n.begin, n.end});
            else
                doc.def_events.push_back({*id, name, n.begin, n.end});
        }
    }
    for (const auto& c : n.children) collect_defs(c, doc);
}

IrError::Code code_for(const std::string& rule) {
    if (rule == "IllegalNesting") return IrError::Code::illegal_nesting;
    if (rule == "UnresolvedReference") return IrError::Code::unresolved_reference;
    if (rule == "MissingAttribute") return IrError::Code::missing_attribute;
    if (rule == "DuplicateId") return IrError::Code::duplicate_id;
    return IrError::Code::invalid_attribute;
}

// Which element kinds may appear directly under a given parent. `nullopt`
// stands for the document top level.
bool allowed_child(std::optional<NodeKind> parent, NodeKind child) {
    using K = NodeKind;
    if (child == K::text) return true;
    // Definitions may sit wherever references can: the first mention of a
    // name in running text is often its definition.
    const bool ref = child == K::ref_state || child == K::ref_event || child == K::def_state || child == K::def_event;
    if (!parent) {
        switch (child) {
            case K::control: case K::action: case K::transition: case K::variable:
            case K::timer: case K::error: case K::def_state: case K::def_event:
            case K::def_var: case K::ref_state: case K::ref_event:
                return true;
            default:
                return false;
        }
    }
    switch (*parent) {
        case K::control:
            switch (child) {
                case K::control: case K::trigger: case K::action: case K::transition:
                case K::variable: case K::timer: case K::error: case K::ref_state: case K::ref_event:
                case K::def_state: case K::def_event:
                    return true;
                default:
                    return false;
            }
        case K::trigger: case K::variable: case K::timer: case K::error:
        case K::arg: case K::arg_source: case K::arg_target: case K::arg_inter:
            return ref;
        case K::action:
            return ref || child == K::arg;
        case K::transition:
            return ref || child == K::arg_source || child == K::arg_target || child == K::arg_inter;
        default:
            return false;
    }
}

std::set<std::string_view> allowed_attrs(NodeKind k) {
    switch (k) {
        case NodeKind::control: return {"relevant"};
        case NodeKind::action: return {"type"};
        case NodeKind::def_state: case NodeKind::def_event: case NodeKind::ref_state: return {"id"};
        case NodeKind::ref_event: return {"id", "type"};
        default: return {};
    }
}

bool parse_int(std::string_view s, int& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

void escape_into(std::string& out, std::string_view s, bool attribute) {
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '"':
                if (attribute) out += "&quot;";
                else out += c;
                break;
            default: out += c;
        }
    }
}

void serialize_node(const Node& n, std::string& out) {
    if (n.kind == NodeKind::text) {
        escape_into(out, n.text, false);
        return;
    }
    out += '<';
    out += n.tag;
    for (const auto& [k, v] : n.attrs) {
        out += ' ';
        out += k;
        out += "=\"";
        escape_into(out, v, true);
        out += '"';
    }
    out += '>';
    for (const auto& c : n.children) serialize_node(c, out);
    out += "</";
    out += n.tag;
    out += '>';
}

}  // namespace

std::string_view kind_name(NodeKind k) {
    if (k == NodeKind::text) return "text";
    for (const auto& t : kTags)
        if (t.kind == k) return t.tag;
    return "?";
}

std::optional<NodeKind> kind_from_tag(std::string_view tag) {
    for (const auto& t : kTags)
        if (t.tag == tag) return t.kind;
    return std::nullopt;
}

std::string_view event_type_name(EventType t) {
    switch (t) {
        case EventType::send: return "send";
        case EventType::receive: return "receive";
        case EventType::compute: return "compute";
    }
    return "compute";
}

const std::string* Node::attr(std::string_view name) const {
    for (const auto& [k, v] : attrs)
        if (k == name) return &v;
    return nullptr;
}

std::vector<const Node*> Node::elements() const {
    std::vector<const Node*> out;
    for (const auto& c : children)
        if (c.is_element()) out.push_back(&c);
    return out;
}

bool Node::relevant() const {
    const auto* v = attr("relevant");
    return !v || *v != "false";
}

std::optional<int> Node::id() const {
    const auto* v = attr("id");
    int out = 0;
    if (!v || !parse_int(*v, out)) return std::nullopt;
    return out;
}

const StateDef* Document::state(int sid) const {
    for (const auto& s : def_states)
        if (s.sid == sid) return &s;
    return nullptr;
}

const EventDef* Document::event(int eid) const {
    for (const auto& e : def_events)
        if (e.eid == eid) return &e;
    return nullptr;
}

EventType ref_event_type(const Node& ref, const Node* enclosing_action) {
    const std::string* t = ref.attr("type");
    if (!t && enclosing_action) t = enclosing_action->attr("type");
    if (t) {
        if (*t == "send") return EventType::send;
        if (*t == "receive") return EventType::receive;
    }
    return EventType::compute;
}

Document parse_ir(std::string_view text, std::string source_name) {
    text = strip_declaration(text);
    Node root;
    root.kind = NodeKind::control;  // placeholder, never exposed
    Builder b;
    b.parser = XML_ParserCreate("UTF-8");
    b.stack.push_back(&root);
    XML_SetUserData(b.parser, &b);
    XML_SetElementHandler(b.parser, on_start, on_end);
    XML_SetCharacterDataHandler(b.parser, on_text);

    std::string open = "<" + std::string(kRootTag) + ">";
    std::string close = "</" + std::string(kRootTag) + ">";
    bool ok = XML_Parse(b.parser, open.data(), static_cast<int>(open.size()), XML_FALSE) == XML_STATUS_OK &&
              XML_Parse(b.parser, text.data(), static_cast<int>(text.size()), XML_FALSE) == XML_STATUS_OK &&
              XML_Parse(b.parser, close.data(), static_cast<int>(close.size()), XML_TRUE) == XML_STATUS_OK;
    if (!ok && b.error.empty()) {
        b.error = std::string("malformed markup: ") + XML_ErrorString(XML_GetErrorCode(b.parser));
        b.error_line = static_cast<int>(XML_GetCurrentLineNumber(b.parser));
    }
    XML_ParserFree(b.parser);
    if (!b.error.empty())
        throw IrError(b.code, b.error + " (line " + std::to_string(b.error_line) + ")", b.error_line);

    Document doc;
    doc.source_name = std::move(source_name);
    doc.blocks = std::move(root.children);
    doc.plain_text = std::move(b.plain);
    for (const auto& n : doc.blocks) collect_defs(n, doc);

    auto violations = validate_ir(doc);
    if (!violations.empty()) {
        const auto& v = violations.front();
        throw IrError(code_for(v.rule), v.rule + ": " + v.message + " at " + v.path + " (line " + std::to_string(v.line) + ")",
                      v.line);
    }
    return doc;
}

Document load_ir(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_ir(ss.str(), path);
}

std::vector<Violation> validate_ir(const Document& doc) {
    std::vector<Violation> out;
    std::map<int, int> sids, eids;
    for (const auto& s : doc.def_states) ++sids[s.sid];
    for (const auto& e : doc.def_events) ++eids[e.eid];

    std::function<void(const Node&, std::optional<NodeKind>, const std::string&)> visit =
        [&](const Node& n, std::optional<NodeKind> parent, const std::string& path) {
            auto report = [&](std::string rule, std::string msg) {
                out.push_back({std::move(rule), path, std::move(msg), n.line});
            };
            if (!allowed_child(parent, n.kind))
                report("IllegalNesting", "<" + n.tag + "> inside " + (parent ? "<" + std::string(kind_name(*parent)) + ">" : "top level"));

            auto allowed = allowed_attrs(n.kind);
            for (const auto& [k, v] : n.attrs)
                if (!allowed.count(k)) report("InvalidAttribute", "unexpected attribute " + k + " on <" + n.tag + ">");

            switch (n.kind) {
                case NodeKind::action: {
                    const auto* t = n.attr("type");
                    if (!t) report("MissingAttribute", "<action> requires type");
                    else if (*t != "send" && *t != "receive" && *t != "issue")
                        report("InvalidAttribute", "action type '" + *t + "'");
                    break;
                }
                case NodeKind::control: {
                    const auto* r = n.attr("relevant");
                    if (r && *r != "true" && *r != "false") report("InvalidAttribute", "relevant='" + *r + "'");
                    break;
                }
                case NodeKind::def_state:
                case NodeKind::def_event:
                case NodeKind::ref_state:
                case NodeKind::ref_event: {
                    if (!n.attr("id")) {
                        report("MissingAttribute", "<" + n.tag + "> requires id");
                        break;
                    }
                    auto id = n.id();
                    if (!id) {
                        report("InvalidAttribute", "non-numeric id '" + *n.attr("id") + "'");
                        break;
                    }
                    if (n.kind == NodeKind::ref_state && !sids.count(*id))
                        report("UnresolvedReference", "state id " + std::to_string(*id));
                    if (n.kind == NodeKind::ref_event && !eids.count(*id))
                        report("UnresolvedReference", "event id " + std::to_string(*id));
                    if (n.kind == NodeKind::def_state && sids[*id] > 1)
                        report("DuplicateId", "state id " + std::to_string(*id));
                    if (n.kind == NodeKind::def_event && eids[*id] > 1)
                        report("DuplicateId", "event id " + std::to_string(*id));
                    if (n.kind == NodeKind::ref_event) {
                        const auto* t = n.attr("type");
                        if (t && *t != "send" && *t != "receive" && *t != "compute" && *t != "issue")
                            report("InvalidAttribute", "event type '" + *t + "'");
                    }
                    break;
                }
                default:
                    break;
            }
            int i = 0;
            for (const auto& c : n.children) {
                if (c.is_element()) visit(c, n.kind, path + "/" + c.tag + "[" + std::to_string(i) + "]");
                ++i;
            }
        };
    int i = 0;
    for (const auto& n : doc.blocks) {
        if (n.is_element()) visit(n, std::nullopt, "/" + n.tag + "[" + std::to_string(i) + "]");
        ++i;
    }
    return out;
}

std::string serialize_ir(const Document& doc) {
    std::string out;
    for (const auto& n : doc.blocks) serialize_node(n, out);
    return out;
}

std::string normalize_name(std::string_view name) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : name) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += c == '-' ? '_' : static_cast<char>(std::toupper(c));
    }
    auto keep = [](unsigned char c) { return std::isalnum(c) || c == '_'; };
    std::size_t b = 0, e = out.size();
    while (b < e && !keep(static_cast<unsigned char>(out[b]))) ++b;
    while (e > b && !keep(static_cast<unsigned char>(out[e - 1]))) --e;
    return out.substr(b, e - b);
}

void Dictionary::add(DictEntry e) {
    auto key = normalize_name(e.name);
    if (key.empty()) return;
    entries_.emplace(std::move(key), std::move(e));
}

const DictEntry* Dictionary::lookup(std::string_view name) const {
    auto it = entries_.find(normalize_name(name));
    return it == entries_.end() ? nullptr : &it->second;
}

Dictionary def_dictionary(const Document& doc) {
    // First referenced direction of every event.
    std::map<int, EventType> dir;
    std::vector<std::pair<const Node*, EntryKind>> surface;
    std::function<void(const Node&, const Node*)> scan = [&](const Node& n, const Node* action) {
        if (n.kind == NodeKind::action) action = &n;
        if (n.kind == NodeKind::ref_event) {
            if (auto id = n.id()) {
                auto t = ref_event_type(n, action);
                auto it = dir.find(*id);
                if (it == dir.end() || (it->second == EventType::compute && t != EventType::compute)) dir[*id] = t;
            }
            surface.emplace_back(&n, EntryKind::event);
        }
        if (n.kind == NodeKind::ref_state) surface.emplace_back(&n, EntryKind::state);
        for (const auto& c : n.children) scan(c, action);
    };
    for (const auto& n : doc.blocks) scan(n, nullptr);

    Dictionary d;
    for (const auto& s : doc.def_states) d.add({EntryKind::state, s.sid, s.name, std::nullopt});
    for (const auto& e : doc.def_events) {
        std::optional<EventType> t;
        if (auto it = dir.find(e.eid); it != dir.end()) t = it->second;
        d.add({EntryKind::event, e.eid, e.name, t});
    }
    for (const auto& v : doc.def_vars) d.add({EntryKind::variable, -1, v, std::nullopt});
    // Referenced surface forms ("acknowledgment" for ACK) resolve to the def.
    for (const auto& [n, kind] : surface) {
        auto id = n->id();
        if (!id) continue;
        if (kind == EntryKind::state) {
            if (doc.state(*id)) d.add({EntryKind::state, *id, std::string(doc.span(*n)), std::nullopt});
        } else if (doc.event(*id)) {
            std::optional<EventType> t;
            if (auto it = dir.find(*id); it != dir.end()) t = it->second;
            d.add({EntryKind::event, *id, std::string(doc.span(*n)), t});
        }
    }
    return d;
}

}  // namespace protofsm::ir

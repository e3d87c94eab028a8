#include "protofsm/transpile.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "protofsm/checker.hpp"

namespace protofsm::transpile {

namespace {

const std::set<std::string, std::less<>> kKeywords{
    "active", "assert", "atomic", "bit", "bool", "break", "byte", "chan", "d_step", "do", "else", "empty", "enabled", "false",
    "fi", "full", "goto", "hidden", "if", "init", "int", "len", "mtype", "nempty", "nfull", "od", "of", "printf", "proctype",
    "rcv", "run", "short", "skip", "snd", "timeout", "true", "typedef", "unless", "xr", "xs"};

bool is_ident(std::string_view s) {
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

// Names that are not Promela identifiers are rewritten; clashes get a suffix.
class Namer {
public:
    std::string operator()(const std::string& raw) {
        if (auto it = given_.find(raw); it != given_.end()) return it->second;
        std::string s;
        for (char c : raw) s += std::isalnum(static_cast<unsigned char>(c)) || c == '_' ? c : '_';
        if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0])) || kKeywords.contains(s)) s = "S_" + s;
        std::string base = s;
        for (int n = 2; used_.contains(s); ++n) s = base + "_" + std::to_string(n);
        used_.insert(s);
        return given_[raw] = s;
    }

private:
    std::map<std::string, std::string> given_;
    std::set<std::string> used_;
};

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

}  // namespace

std::string to_promela(const Fsm& fsm_in, int capacity) {
    if (fsm_in.states.empty()) throw TranspileError(TranspileError::Code::empty_fsm, "EmptyFsm: no states to transpile");
    Fsm fsm = fsm_in;
    fsm.validate();
    fsm.normalize();
    if (capacity <= 0) capacity = checker::natural_capacity(fsm);

    Namer state_name, msg_name;
    for (const auto& s : fsm.states) state_name(s);
    auto strip = [](const std::string& q) { return q.substr(0, q.size() - 1); };
    std::vector<std::string> in_names, out_names;
    for (const auto& q : fsm.inputs) in_names.push_back(msg_name(strip(q)));
    for (const auto& q : fsm.outputs) out_names.push_back(msg_name(strip(q)));
    std::set<std::string> messages(in_names.begin(), in_names.end());
    messages.insert(out_names.begin(), out_names.end());
    std::set<std::string> flags;
    for (const auto& t : fsm.transitions) {
        for (const auto& g : t.guard) flags.insert(g.var);
        for (const auto& a : t.assign) flags.insert(a.var);
    }

    std::vector<std::string> states;
    for (const auto& s : fsm.states) states.push_back(state_name(s));

    std::ostringstream os;
    os << "/* Two symmetric peers of one protocol joined by bounded FIFO channels.\n"
          " * Lossy sends: a message sent into a full channel is lost (spin -m).\n"
          " * A state that receives something discards any other inbound head.\n"
          " * timeout fires only when no other move is possible; self-loops are\n"
          " * not counted as progress by the embedded checker. */\n";
    os << "/* states: " << join(states, " ") << " */\n";
    os << "/* I: " << join(in_names, " ") << " */\n";
    os << "/* O: " << join(out_names, " ") << " */\n";
    os << "#define CAPACITY " << capacity << "\n";
    if (!messages.empty()) os << "mtype = { " << join({messages.begin(), messages.end()}, ", ") << " };\n";
    os << "chan to_peer1 = [CAPACITY] of { mtype };\n";
    os << "chan to_peer2 = [CAPACITY] of { mtype };\n\n";
    os << "proctype Peer(chan rcv; chan snd) {\n";
    for (const auto& f : flags) os << "  bool " << f << " = false;\n";
    os << "  goto " << state_name(fsm.initial) << ";\n";

    std::vector<std::size_t> order(fsm.states.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return states[a] < states[b]; });

    for (auto si : order) {
        const std::string& raw = fsm.states[si];
        os << states[si] << ":\n";
        std::vector<const Transition*> out;
        for (const auto& t : fsm.transitions)
            if (t.from == raw) out.push_back(&t);
        std::stable_sort(out.begin(), out.end(), [](const Transition* a, const Transition* b) {
            return std::tie(a->label, a->to) < std::tie(b->label, b->to);
        });
        std::set<std::string> first_receives;
        for (const auto* t : out)
            if (t->label.kind == LabelKind::events && t->label.events.front().dir == Direction::receive)
                first_receives.insert(msg_name(t->label.events.front().name));
        if (out.empty()) {
            os << "  (false);\n";
            continue;
        }
        os << "  if\n";
        for (const auto* t : out) {
            std::vector<std::string> cond, body;
            if (t->label.is_timeout()) cond.push_back("timeout");
            for (const auto& g : t->guard) cond.push_back("(" + g.var + " == " + (g.value ? "true" : "false") + ")");
            const bool recv_first = t->label.kind == LabelKind::events && t->label.events.front().dir == Direction::receive;
            if (recv_first && !cond.empty()) cond.push_back("rcv?[" + msg_name(t->label.events.front().name) + "]");
            for (const auto& e : t->label.events)
                body.push_back(e.dir == Direction::receive ? "rcv?" + msg_name(e.name) : "snd!" + msg_name(e.name));
            for (const auto& a : t->assign) body.push_back(a.var + " = " + (a.value ? "true" : "false"));
            body.push_back("goto " + state_name(t->to));
            if (cond.empty() && body.size() == 1) {
                os << "  :: " << body[0] << "\n";
                continue;
            }
            std::string text = cond.empty() ? "" : join(cond, " && ") + " -> ";
            text += join(body, "; ");
            os << "  :: atomic { " << text << " }\n";
        }
        if (!first_receives.empty())
            for (const auto& m : messages)
                if (!first_receives.contains(m)) os << "  :: rcv?" << m << " -> goto " << states[si] << "  /* discard */\n";
        os << "  fi;\n";
    }
    os << "}\n\n";
    os << "init {\n  atomic { run Peer(to_peer1, to_peer2); run Peer(to_peer2, to_peer1) }\n}\n";
    return os.str();
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

std::vector<std::string> words(std::string_view s) {
    std::istringstream is{std::string(s)};
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

[[noreturn]] void unsupported(int line, const std::string& what) {
    throw TranspileError(TranspileError::Code::unsupported_construct,
                         "UnsupportedConstruct at line " + std::to_string(line) + ": " + what, line);
}

// Splits on ';' and "->" outside brackets.
std::vector<std::string> statements(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '[' || c == '(') ++depth;
        if (c == ']' || c == ')') --depth;
        if (depth == 0 && (c == ';' || (c == '-' && i + 1 < s.size() && s[i + 1] == '>'))) {
            if (c == '-') ++i;
            if (auto t = trim(cur); !t.empty()) out.push_back(t);
            cur.clear();
            continue;
        }
        cur += c;
    }
    if (auto t = trim(cur); !t.empty()) out.push_back(t);
    return out;
}

bool parse_bool(const std::string& v, int line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    unsupported(line, "flag value '" + v + "'");
}

}  // namespace

Fsm parse_model(std::string_view text) {
    Fsm fsm;
    std::vector<std::string> declared_states;
    bool have_in = false, have_out = false, in_peer = false, have_peer = false;
    std::string current;
    std::vector<std::string> label_order;

    std::istringstream is{std::string(text)};
    std::string raw;
    int line_no = 0;
    bool in_comment = false;
    while (std::getline(is, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (in_comment) {
            if (line.find("*/") != std::string::npos) in_comment = false;
            continue;
        }
        if (line.empty()) continue;
        if (starts_with(line, "/*")) {
            const auto close = line.find("*/");
            if (close == std::string::npos) {
                in_comment = true;
                continue;
            }
            std::string body = trim(line.substr(2, close - 2));
            auto w = words(body);
            if (!w.empty() && w[0] == "states:") declared_states.assign(w.begin() + 1, w.end());
            if (!w.empty() && w[0] == "I:") {
                have_in = true;
                for (std::size_t i = 1; i < w.size(); ++i) fsm.inputs.insert(w[i] + "?");
            }
            if (!w.empty() && w[0] == "O:") {
                have_out = true;
                for (std::size_t i = 1; i < w.size(); ++i) fsm.outputs.insert(w[i] + "!");
            }
            continue;
        }
        // Trailing comments on code lines carry no meaning.
        if (auto c = line.find("/*"); c != std::string::npos) line = trim(line.substr(0, c));

        if (!in_peer) {
            if (starts_with(line, "#define") || starts_with(line, "mtype") || starts_with(line, "chan ")) continue;
            if (starts_with(line, "proctype Peer(")) {
                if (have_peer) unsupported(line_no, "second Peer proctype");
                in_peer = have_peer = true;
                continue;
            }
            if (starts_with(line, "init")) {
                // The init block only starts the two peers.
                while (line.find('}') == std::string::npos || std::count(line.begin(), line.end(), '{') > std::count(line.begin(), line.end(), '}')) {
                    if (!std::getline(is, raw)) break;
                    ++line_no;
                    line += trim(raw);
                }
                continue;
            }
            unsupported(line_no, "'" + line + "'");
        }

        if (line == "}") {
            in_peer = false;
            continue;
        }
        if (starts_with(line, "bool ")) continue;
        if (starts_with(line, "goto ") && current.empty()) {
            std::string target = trim(line.substr(5));
            if (!target.empty() && target.back() == ';') target.pop_back();
            fsm.initial = trim(target);
            continue;
        }
        if (line.back() == ':' && is_ident(std::string_view(line).substr(0, line.size() - 1))) {
            current = line.substr(0, line.size() - 1);
            label_order.push_back(current);
            continue;
        }
        if (line == "if" || line == "fi;" || line == "(false);") {
            if (current.empty()) unsupported(line_no, "statement outside a state block");
            continue;
        }
        if (!starts_with(line, "::")) unsupported(line_no, "'" + line + "'");
        if (current.empty()) unsupported(line_no, "branch outside a state block");
        std::string branch = trim(line.substr(2));

        Transition t;
        t.from = current;
        if (starts_with(branch, "atomic {")) {
            if (branch.back() != '}') unsupported(line_no, "unterminated atomic");
            branch = trim(branch.substr(8, branch.size() - 9));
        } else if (starts_with(branch, "rcv?")) {
            auto st = statements(branch);
            if (st.size() != 2 || st[1] != "goto " + current) unsupported(line_no, "'" + line + "'");
            continue;  // discard of an unexpected message
        }
        std::vector<Event> events;
        bool timeout = false, have_goto = false;
        for (const auto& s : statements(branch)) {
            if (have_goto) unsupported(line_no, "statement after goto");
            if (starts_with(s, "goto ")) {
                t.to = trim(s.substr(5));
                have_goto = true;
            } else if (starts_with(s, "rcv?") && s.find('[') == std::string::npos) {
                events.push_back({s.substr(4), Direction::receive});
            } else if (starts_with(s, "snd!")) {
                events.push_back({s.substr(4), Direction::send});
            } else if (s.find("&&") != std::string::npos || s == "timeout" || starts_with(s, "(") || starts_with(s, "rcv?[")) {
                std::string rest = s;
                for (std::size_t p; !rest.empty();) {
                    p = rest.find("&&");
                    std::string c = trim(rest.substr(0, p));
                    rest = p == std::string::npos ? "" : rest.substr(p + 2);
                    if (c == "timeout") {
                        timeout = true;
                    } else if (starts_with(c, "rcv?[")) {
                        continue;  // head test mirrored by the following receive
                    } else if (c.size() > 2 && c.front() == '(' && c.back() == ')') {
                        auto w = words(c.substr(1, c.size() - 2));
                        if (w.size() != 3 || w[1] != "==") unsupported(line_no, "guard '" + c + "'");
                        t.guard.push_back({w[0], parse_bool(w[2], line_no)});
                    } else {
                        unsupported(line_no, "condition '" + c + "'");
                    }
                }
            } else if (auto eq = s.find(" = "); eq != std::string::npos) {
                t.assign.push_back({trim(s.substr(0, eq)), parse_bool(trim(s.substr(eq + 3)), line_no)});
            } else {
                unsupported(line_no, "statement '" + s + "'");
            }
        }
        if (!have_goto) unsupported(line_no, "branch without goto");
        if (timeout && !events.empty()) unsupported(line_no, "timeout mixed with channel operations");
        t.label = timeout ? Label::timeout() : events.empty() ? Label::epsilon() : Label::of(std::move(events));
        fsm.transitions.push_back(std::move(t));
    }
    if (!have_peer) unsupported(line_no, "no Peer proctype");
    if (label_order.empty()) unsupported(line_no, "no states");

    fsm.states = declared_states.empty() ? label_order : declared_states;
    for (const auto& s : label_order)
        if (std::find(fsm.states.begin(), fsm.states.end(), s) == fsm.states.end())
            unsupported(line_no, "state '" + s + "' missing from the states comment");
    if (fsm.initial.empty()) fsm.initial = label_order.front();
    for (const auto& t : fsm.transitions)
        for (const auto& e : t.label.events) {
            if (e.dir == Direction::receive && !have_in) fsm.inputs.insert(e.qualified());
            if (e.dir == Direction::send && !have_out) fsm.outputs.insert(e.qualified());
        }
    fsm.normalize();
    try {
        fsm.validate();
    } catch (const FsmError& e) {
        unsupported(line_no, e.what());
    }
    return fsm;
}

}  // namespace protofsm::transpile

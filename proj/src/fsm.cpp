#include "protofsm/fsm.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace protofsm {

using nlohmann::json;

std::string Event::qualified() const {
    return name + (dir == Direction::receive ? "?" : "!");
}

Label Label::of(std::vector<Event> evs) {
    if (evs.empty()) return epsilon();
    return {LabelKind::events, std::move(evs)};
}

std::string Label::to_string() const {
    switch (kind) {
        case LabelKind::epsilon: return "eps";
        case LabelKind::timeout: return "timeout";
        case LabelKind::events: break;
    }
    std::string out;
    for (const auto& e : events) {
        if (!out.empty()) out += ' ';
        out += e.qualified();
    }
    return out;
}

Label Label::parse(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::vector<Event> evs;
    std::string tok;
    while (in >> tok) {
        if (tok == "eps" || tok == "timeout") {
            if (!evs.empty() || in >> tok) throw std::invalid_argument("label mixes events with eps/timeout");
            return tok == "eps" ? epsilon() : timeout();
        }
        char d = tok.back();
        if ((d != '?' && d != '!') || tok.size() < 2) throw std::invalid_argument("bad event token: " + tok);
        evs.push_back({tok.substr(0, tok.size() - 1), d == '?' ? Direction::receive : Direction::send});
    }
    if (evs.empty()) throw std::invalid_argument("empty label");
    return of(std::move(evs));
}

bool Fsm::has_state(std::string_view s) const {
    return std::find(states.begin(), states.end(), s) != states.end();
}

std::vector<std::string> Fsm::message_names() const {
    std::set<std::string> names;
    for (const auto* side : {&inputs, &outputs})
        for (const auto& q : *side) names.insert(q.substr(0, q.size() - 1));
    return {names.begin(), names.end()};
}

bool type_checks(const Transition& t, const Fsm& fsm) {
    if (!fsm.has_state(t.from) || !fsm.has_state(t.to)) return false;
    if (t.label.kind != LabelKind::events) return t.label.events.empty();
    if (t.label.events.empty()) return false;
    for (const auto& e : t.label.events) {
        const auto& side = e.dir == Direction::receive ? fsm.inputs : fsm.outputs;
        if (!side.contains(e.qualified())) return false;
    }
    return true;
}

void Fsm::validate() const {
    using C = FsmError::Code;
    if (states.empty()) throw FsmError(C::empty_fsm, "fsm has no states");
    if (std::set<std::string>(states.begin(), states.end()).size() != states.size())
        throw FsmError(C::schema_violation, "duplicate state name");
    if (!has_state(initial)) throw FsmError(C::schema_violation, "initial state '" + initial + "' is not a state");
    for (const auto& q : inputs) {
        if (q.size() < 2) throw FsmError(C::schema_violation, "malformed input '" + q + "'");
        if (q.back() != '?') throw FsmError(C::disjointness_violation, "output event '" + q + "' listed as input");
    }
    for (const auto& q : outputs) {
        if (q.size() < 2) throw FsmError(C::schema_violation, "malformed output '" + q + "'");
        if (q.back() != '!') throw FsmError(C::disjointness_violation, "input event '" + q + "' listed as output");
        if (inputs.contains(q)) throw FsmError(C::disjointness_violation, "event '" + q + "' in both I and O");
    }
    for (const auto& t : transitions) {
        if (!type_checks(t, *this))
            throw FsmError(C::schema_violation,
                           "transition " + t.from + " --" + t.label.to_string() + "--> " + t.to + " does not type-check");
    }
}

void Fsm::normalize() {
    std::sort(transitions.begin(), transitions.end());
    transitions.erase(std::unique(transitions.begin(), transitions.end()), transitions.end());
}

namespace {

json flags_to_json(const std::vector<FlagValue>& flags) {
    json arr = json::array();
    for (const auto& f : flags) arr.push_back({{"var", f.var}, {"value", f.value}});
    return arr;
}

std::vector<FlagValue> flags_from_json(const json& j) {
    std::vector<FlagValue> out;
    for (const auto& f : j) out.push_back({f.at("var").get<std::string>(), f.at("value").get<bool>()});
    return out;
}

json label_to_json(const Label& l) {
    if (l.is_epsilon()) return "eps";
    if (l.is_timeout()) return "timeout";
    json arr = json::array();
    for (const auto& e : l.events)
        arr.push_back({{"event", e.name}, {"dir", e.dir == Direction::receive ? "?" : "!"}});
    return arr;
}

Label label_from_json(const json& j) {
    if (j.is_string()) {
        auto s = j.get<std::string>();
        if (s == "eps") return Label::epsilon();
        if (s == "timeout") return Label::timeout();
        throw FsmError(FsmError::Code::schema_violation, "unknown label keyword '" + s + "'");
    }
    if (!j.is_array() || j.empty()) throw FsmError(FsmError::Code::schema_violation, "label must be eps, timeout or a nonempty array");
    std::vector<Event> evs;
    for (const auto& e : j) {
        auto dir = e.at("dir").get<std::string>();
        if (dir != "?" && dir != "!") throw FsmError(FsmError::Code::schema_violation, "bad event direction '" + dir + "'");
        evs.push_back({e.at("event").get<std::string>(), dir == "?" ? Direction::receive : Direction::send});
    }
    return Label::of(std::move(evs));
}

}  // namespace

std::string to_json(const Fsm& fsm) {
    json j;
    j["states"] = fsm.states;
    j["inputs"] = fsm.inputs;
    j["outputs"] = fsm.outputs;
    j["initial"] = fsm.initial;
    json ts = json::array();
    for (const auto& t : fsm.transitions) {
        json jt = {{"from", t.from}, {"to", t.to}, {"label", label_to_json(t.label)}};
        if (!t.guard.empty()) jt["guard"] = flags_to_json(t.guard);
        if (!t.assign.empty()) jt["assign"] = flags_to_json(t.assign);
        if (!t.comment.empty()) jt["comment"] = t.comment;
        ts.push_back(std::move(jt));
    }
    j["transitions"] = std::move(ts);
    return j.dump(2) + "\n";
}

Fsm fsm_from_json(std::string_view text) {
    Fsm fsm;
    try {
        auto j = json::parse(text);
        fsm.states = j.at("states").get<std::vector<std::string>>();
        fsm.inputs = j.at("inputs").get<std::set<std::string>>();
        fsm.outputs = j.at("outputs").get<std::set<std::string>>();
        fsm.initial = j.at("initial").get<std::string>();
        for (const auto& jt : j.at("transitions")) {
            Transition t;
            t.from = jt.at("from").get<std::string>();
            t.to = jt.at("to").get<std::string>();
            t.label = label_from_json(jt.at("label"));
            if (jt.contains("guard")) t.guard = flags_from_json(jt["guard"]);
            if (jt.contains("assign")) t.assign = flags_from_json(jt["assign"]);
            if (jt.contains("comment")) t.comment = jt["comment"].get<std::string>();
            fsm.transitions.push_back(std::move(t));
        }
    } catch (const json::exception& e) {
        throw FsmError(FsmError::Code::schema_violation, std::string("fsm json: ") + e.what());
    }
    fsm.validate();
    return fsm;
}

Fsm load_fsm(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return fsm_from_json(ss.str());
}

void save_fsm(const Fsm& fsm, const std::filesystem::path& path) {
    fsm.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json(fsm);
}

namespace {

std::string dot_quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + '"';
}

std::string edge_text(const Transition& t) {
    std::string out;
    for (const auto& g : t.guard) out += g.var + (g.value ? "==true; " : "==false; ");
    for (const auto& a : t.assign) out += a.var + (a.value ? ":=true; " : ":=false; ");
    out += t.label.is_epsilon() ? "ε" : t.label.to_string();
    return out;
}

}  // namespace

std::string to_dot(const Fsm& fsm, std::string_view graph_name) {
    std::ostringstream out;
    out << "digraph " << dot_quote(graph_name) << " {\n";
    out << "  rankdir=TB;\n  __start [shape=point];\n";
    std::vector<std::string> states = fsm.states;
    std::sort(states.begin(), states.end());
    for (const auto& s : states) out << "  " << dot_quote(s) << " [shape=circle];\n";
    out << "  __start -> " << dot_quote(fsm.initial) << ";\n";
    std::vector<Transition> ts = fsm.transitions;
    std::sort(ts.begin(), ts.end());
    for (const auto& t : ts)
        out << "  " << dot_quote(t.from) << " -> " << dot_quote(t.to) << " [label=" << dot_quote(edge_text(t)) << "];\n";
    out << "}\n";
    return out.str();
}

}  // namespace protofsm

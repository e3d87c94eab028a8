#include "json.hpp"
#include <sstream>

#include "protofsm/checker.hpp"

namespace protofsm::checker {

using nlohmann::json;

namespace {

const char* op_name(AttackAction::Op op) {
    switch (op) {
        case AttackAction::Op::inject: return "inject";
        case AttackAction::Op::drop: return "drop";
        case AttackAction::Op::forward: return "forward";
        case AttackAction::Op::exit: return "exit";
    }
    return "exit";
}

}  // namespace

std::string AttackAction::to_string() const {
    std::string s = op_name(op);
    if (op == Op::inject || op == Op::drop) {
        s += "(";
        if (!msg.empty()) s += msg + ",";
        s += "peer" + std::to_string(peer + 1) + ")";
    }
    return s;
}

std::string Attacker::name() const {
    return provenance.model + "." + provenance.property + "." + std::to_string(provenance.index);
}

std::string to_json(const Attacker& a) {
    json script = json::array();
    for (const auto& act : a.script) {
        json j{{"op", op_name(act.op)}};
        if (!act.msg.empty()) j["msg"] = act.msg;
        if (act.peer >= 0) j["peer"] = act.peer;
        script.push_back(std::move(j));
    }
    json j{{"name", a.name()},
           {"model", a.provenance.model},
           {"property", a.provenance.property},
           {"index", a.provenance.index},
           {"script", std::move(script)}};
    return j.dump(2);
}

Attacker attacker_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("attacker: ") + e.what());
    }
    Attacker a;
    a.provenance.model = j.value("model", "");
    a.provenance.property = j.value("property", "");
    a.provenance.index = j.value("index", 0);
    if (!j.contains("script") || !j["script"].is_array()) throw std::invalid_argument("attacker: missing script array");
    for (const auto& s : j["script"]) {
        AttackAction act;
        auto op = s.value("op", "");
        if (op == "inject") act.op = AttackAction::Op::inject;
        else if (op == "drop") act.op = AttackAction::Op::drop;
        else if (op == "forward") act.op = AttackAction::Op::forward;
        else if (op == "exit") act.op = AttackAction::Op::exit;
        else throw std::invalid_argument("attacker: unknown op '" + op + "'");
        act.msg = s.value("msg", "");
        act.peer = s.value("peer", -1);
        if (act.op == AttackAction::Op::inject && (act.msg.empty() || act.peer < 0 || act.peer > 1))
            throw std::invalid_argument("attacker: inject needs msg and peer 0 or 1");
        if (act.op == AttackAction::Op::drop && (act.peer < 0 || act.peer > 1))
            throw std::invalid_argument("attacker: drop needs peer 0 or 1");
        a.script.push_back(std::move(act));
    }
    return a;
}

std::string trace_to_json_lines(const System& sys, const std::vector<TraceStep>& trace) {
    std::ostringstream out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& c = trace[i].config;
        json q = json::array();
        for (int k = 0; k < 2; ++k) {
            json one = json::array();
            for (int m = 0; m < c.qlen[k]; ++m) one.push_back(sys.messages().at(c.queue[k][m]));
            q.push_back(std::move(one));
        }
        json j{{"step", i},
               {"action", trace[i].action},
               {"states", {sys.state_name(c.state[0]), sys.state_name(c.state[1])}},
               {"queues", std::move(q)},
               {"daisy", c.mode == DaisyMode::active}};
        out << j.dump() << '\n';
    }
    return out.str();
}

std::vector<AttackAction> project(const System& sys, const std::vector<Move>& trace) {
    std::vector<AttackAction> out;
    for (const auto& m : trace) {
        switch (m.kind) {
            case Move::Kind::inject: out.push_back({AttackAction::Op::inject, sys.messages().at(m.message), m.peer}); break;
            case Move::Kind::drop: out.push_back({AttackAction::Op::drop, sys.messages().at(m.message), m.peer}); break;
            case Move::Kind::exit:
                if (m.peer != -2) out.push_back({AttackAction::Op::exit, "", -1});
                break;
            default: break;
        }
    }
    return out;
}

}  // namespace protofsm::checker

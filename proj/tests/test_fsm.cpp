#include <filesystem>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "protofsm/checker.hpp"
#include "protofsm/fsm.hpp"

using namespace protofsm;

namespace {

Transition tr(std::string from, std::string to, const std::string& label) {
    return {std::move(from), std::move(to), Label::parse(label), {}, {}, {}};
}

Fsm small() {
    Fsm f;
    f.states = {"A", "B"};
    f.inputs = {"x?"};
    f.outputs = {"x!", "y!"};
    f.initial = "A";
    f.transitions = {tr("A", "B", "x? y!"), tr("B", "A", "timeout"), tr("A", "A", "eps")};
    return f;
}

FsmError::Code error_of(const Fsm& f) {
    try {
        f.validate();
    } catch (const FsmError& e) {
        return e.code();
    }
    FAIL("expected FsmError");
    return FsmError::Code::schema_violation;
}

}  // namespace

TEST_CASE("labels print and parse") {
    for (const char* s : {"eps", "timeout", "SYN?", "SYN? SYN! ACK!"}) CHECK(Label::parse(s).to_string() == s);
    CHECK(Label::parse("  a?   b! ").to_string() == "a? b!");
    CHECK(Label::of({}).is_epsilon());
    CHECK_THROWS_AS(Label::parse(""), std::invalid_argument);
    CHECK_THROWS_AS(Label::parse("a"), std::invalid_argument);
    CHECK_THROWS_AS(Label::parse("!"), std::invalid_argument);
    CHECK_THROWS_AS(Label::parse("a? eps"), std::invalid_argument);
    CHECK_THROWS_AS(Label::parse("timeout a!"), std::invalid_argument);
}

TEST_CASE("validate accepts a well-formed model") {
    CHECK_NOTHROW(small().validate());
    CHECK(small().message_names() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("validate reports each broken invariant") {
    Fsm f = small();
    f.states.clear();
    CHECK(error_of(f) == FsmError::Code::empty_fsm);

    f = small();
    f.states.push_back("A");
    CHECK(error_of(f) == FsmError::Code::schema_violation);

    f = small();
    f.initial = "Q";
    CHECK(error_of(f) == FsmError::Code::schema_violation);

    f = small();
    f.inputs.insert("x!");
    CHECK(error_of(f) == FsmError::Code::disjointness_violation);

    f = small();
    f.outputs.insert("z?");
    CHECK(error_of(f) == FsmError::Code::disjointness_violation);

    f = small();
    f.transitions.push_back(tr("A", "Q", "eps"));
    CHECK(error_of(f) == FsmError::Code::schema_violation);

    f = small();
    f.transitions.push_back(tr("A", "B", "y?"));  // y is only ever sent
    CHECK(error_of(f) == FsmError::Code::schema_violation);
}

TEST_CASE("type_checks agrees with the alphabet sides") {
    auto f = small();
    CHECK(type_checks(tr("A", "B", "x? x! y!"), f));
    CHECK_FALSE(type_checks(tr("A", "B", "y?"), f));
    CHECK_FALSE(type_checks(tr("A", "C", "x?"), f));
    CHECK(type_checks(tr("B", "B", "timeout"), f));
}

TEST_CASE("normalize sorts and removes duplicates, ignoring comments") {
    auto f = small();
    auto dup = f.transitions[0];
    dup.comment = "same edge, other note";
    f.transitions.push_back(dup);
    f.normalize();
    CHECK(f.transitions.size() == 3);
    CHECK(std::is_sorted(f.transitions.begin(), f.transitions.end()));
}

TEST_CASE("fsm json round trip keeps guards, assignments and comments") {
    auto f = small();
    f.transitions[0].guard = {{"active", true}};
    f.transitions[0].assign = {{"active", false}, {"seen", true}};
    f.transitions[1].comment = "retransmission";
    auto back = fsm_from_json(to_json(f));
    CHECK(back == f);
    CHECK(back.transitions[1].comment == "retransmission");
    CHECK(to_json(back) == to_json(f));
}

TEST_CASE("canonical fixtures load and round trip") {
    for (const char* name : {"canonical_tcp.json", "canonical_dccp.json"}) {
        CAPTURE(name);
        auto f = load_fsm(data_path(name));
        CHECK(fsm_from_json(to_json(f)) == f);
        CHECK(f.initial == "CLOSED");
    }
}

TEST_CASE("malformed fsm json is a schema violation") {
    auto code = [](const std::string& text) {
        try {
            fsm_from_json(text);
        } catch (const FsmError& e) {
            return e.code();
        }
        FAIL("expected FsmError");
        return FsmError::Code::empty_fsm;
    };
    CHECK(code("{") == FsmError::Code::schema_violation);
    CHECK(code(R"({"states":["A"]})") == FsmError::Code::schema_violation);
    const std::string head = R"({"states":["A"],"inputs":[],"outputs":["a!"],"initial":"A","transitions":[)";
    CHECK(code(head + R"({"from":"A","to":"A","label":"skip"}]})") == FsmError::Code::schema_violation);
    CHECK(code(head + R"({"from":"A","to":"A","label":[]}]})") == FsmError::Code::schema_violation);
    CHECK(code(head + R"({"from":"A","to":"A","label":[{"event":"a","dir":"<"}]}]})") == FsmError::Code::schema_violation);
    CHECK(code(R"({"states":[],"inputs":[],"outputs":[],"initial":"A","transitions":[]})") == FsmError::Code::empty_fsm);
}

TEST_CASE("save_fsm and load_fsm agree") {
    auto path = std::filesystem::temp_directory_path() / "protofsm_save_test.json";
    save_fsm(small(), path);
    CHECK(load_fsm(path) == small());
    std::filesystem::remove(path);
    CHECK_THROWS(load_fsm("/nonexistent/model.json"));
}

TEST_CASE("dot output is deterministic and complete") {
    auto f = small();
    auto g = f;
    std::reverse(g.transitions.begin(), g.transitions.end());
    std::reverse(g.states.begin(), g.states.end());
    CHECK(to_dot(f, "m") == to_dot(g, "m"));
    auto dot = to_dot(f, "m");
    CHECK(dot.starts_with("digraph \"m\" {"));
    CHECK(dot.find("__start -> \"A\"") != std::string::npos);
    CHECK(dot.find("label=\"x? y!\"") != std::string::npos);
    CHECK(dot.find("label=\"timeout\"") != std::string::npos);
}

TEST_CASE("attacker json round trip and rejection of bad scripts") {
    using namespace checker;
    Attacker a;
    a.script = {{AttackAction::Op::drop, "SYN", 0}, {AttackAction::Op::inject, "ACK", 1}, {AttackAction::Op::exit, "", -1}};
    a.provenance = {"TCP.Gold", "phi1", 3};
    CHECK(a.name() == "TCP.Gold.phi1.3");
    CHECK(a.script[1].to_string() == "inject(ACK,peer2)");
    auto back = attacker_from_json(to_json(a));
    CHECK(back.script == a.script);
    CHECK(back.name() == a.name());

    CHECK_THROWS_AS(attacker_from_json("not json"), std::invalid_argument);
    CHECK_THROWS_AS(attacker_from_json(R"({"model":"m"})"), std::invalid_argument);
    CHECK_THROWS_AS(attacker_from_json(R"({"script":[{"op":"teleport"}]})"), std::invalid_argument);
    CHECK_THROWS_AS(attacker_from_json(R"({"script":[{"op":"inject","peer":0}]})"), std::invalid_argument);
    CHECK_THROWS_AS(attacker_from_json(R"({"script":[{"op":"inject","msg":"ACK","peer":2}]})"), std::invalid_argument);
    CHECK_THROWS_AS(attacker_from_json(R"({"script":[{"op":"drop"}]})"), std::invalid_argument);
}

TEST_CASE("random models survive the json round trip") {
    std::mt19937 rng(8);
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    for (int iter = 0; iter < 200; ++iter) {
        Fsm f;
        for (int i = uni(1, 6); i > 0; --i) f.states.push_back("S" + std::to_string(i));
        f.inputs = {"a?", "b?"};
        f.outputs = {"a!"};
        f.initial = f.states.front();
        const std::vector<std::string> labels{"eps", "timeout", "a?", "b? a!", "a! a!", "a? b?"};
        for (int k = uni(0, 10); k > 0; --k) {
            auto t = tr(f.states[uni(0, static_cast<int>(f.states.size()) - 1)],
                        f.states[uni(0, static_cast<int>(f.states.size()) - 1)], labels[uni(0, 5)]);
            if (uni(0, 2) == 0) t.guard.push_back({"g", uni(0, 1) == 1});
            if (uni(0, 2) == 0) t.assign.push_back({"g", uni(0, 1) == 1});
            f.transitions.push_back(t);
        }
        CHECK(fsm_from_json(to_json(f)) == f);
    }
}

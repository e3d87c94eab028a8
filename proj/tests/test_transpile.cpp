#include <deque>
#include <random>
#include <unordered_set>

#include "doctest.h"
#include "fixtures.hpp"
#include "protofsm/checker.hpp"
#include "protofsm/transpile.hpp"

using namespace protofsm;
using transpile::parse_model;
using transpile::to_promela;
using transpile::TranspileError;

namespace {

Transition tr(std::string from, std::string to, const std::string& label) {
    Transition t;
    t.from = std::move(from);
    t.to = std::move(to);
    t.label = Label::parse(label);
    return t;
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

Fsm two_state() {
    Fsm f;
    f.states = {"A", "B"};
    f.outputs = {"x!"};
    f.initial = "A";
    f.transitions = {tr("A", "B", "x!")};
    return f;
}

Fsm random_fsm(std::mt19937& rng) {
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    Fsm f;
    int n = uni(1, 5);
    for (int i = 0; i < n; ++i) f.states.push_back("S" + std::to_string(i));
    const std::vector<std::string> names{"a", "b", "c"};
    std::vector<Event> pool;
    for (const auto& m : names) {
        if (uni(0, 1)) {
            f.inputs.insert(m + "?");
            pool.push_back({m, Direction::receive});
        }
        if (uni(0, 1)) {
            f.outputs.insert(m + "!");
            pool.push_back({m, Direction::send});
        }
    }
    f.initial = f.states[uni(0, n - 1)];
    int k = uni(0, 8);
    for (int i = 0; i < k; ++i) {
        Transition t;
        t.from = f.states[uni(0, n - 1)];
        t.to = f.states[uni(0, n - 1)];
        int kind = pool.empty() ? uni(0, 1) : uni(0, 4);
        if (kind == 0) t.label = Label::epsilon();
        else if (kind == 1) t.label = Label::timeout();
        else {
            std::vector<Event> evs;
            for (int j = uni(1, 3); j > 0; --j) evs.push_back(pool[uni(0, static_cast<int>(pool.size()) - 1)]);
            t.label = Label::of(std::move(evs));
        }
        if (uni(0, 3) == 0) t.guard.push_back({uni(0, 1) ? "p" : "q", uni(0, 1) == 1});
        if (uni(0, 3) == 0) t.assign.push_back({"p", uni(0, 1) == 1});
        f.transitions.push_back(std::move(t));
    }
    f.normalize();
    return f;
}

}  // namespace

TEST_CASE("two-state model gives two labelled blocks and one send") {
    auto text = to_promela(two_state());
    CHECK(count(text, "\nA:\n") == 1);
    CHECK(count(text, "\nB:\n") == 1);
    CHECK(count(text, "snd!x") == 1);
    CHECK(count(text, "rcv?") == 0);
    CHECK(text.find("run Peer(to_peer1, to_peer2)") != std::string::npos);
    CHECK(text.find("run Peer(to_peer2, to_peer1)") != std::string::npos);
    CHECK(text.find("#define CAPACITY 1") != std::string::npos);
}

TEST_CASE("explicit capacity is honoured") {
    CHECK(to_promela(two_state(), 3).find("#define CAPACITY 3") != std::string::npos);
}

TEST_CASE("listening states discard unexpected messages") {
    Fsm f;
    f.states = {"L", "M"};
    f.inputs = {"a?", "b?"};
    f.initial = "L";
    f.transitions = {tr("L", "M", "a?")};
    auto text = to_promela(f);
    CHECK(text.find(":: rcv?b -> goto L  /* discard */") != std::string::npos);
    CHECK(count(text, "/* discard */") == 1);  // M listens for nothing
    CHECK(parse_model(text) == f);
}

TEST_CASE("output is deterministic") {
    auto f = load_fsm(data_path("canonical_dccp.json"));
    CHECK(to_promela(f) == to_promela(f));
    auto shuffled = f;
    std::reverse(shuffled.transitions.begin(), shuffled.transitions.end());
    CHECK(to_promela(shuffled) == to_promela(f));
}

TEST_CASE("canonical models survive a round trip") {
    for (const char* name : {"canonical_tcp.json", "canonical_dccp.json"}) {
        CAPTURE(name);
        auto f = load_fsm(data_path(name));
        auto back = parse_model(to_promela(f));
        f.normalize();
        CHECK(back == f);
    }
}

TEST_CASE("random models survive a round trip") {
    std::mt19937 rng(31);
    for (int i = 0; i < 300; ++i) {
        auto f = random_fsm(rng);
        auto text = to_promela(f);
        INFO(text);
        CHECK(parse_model(text) == f);
    }
}

TEST_CASE("guards and assignments are emitted inside the atomic step") {
    Fsm f = two_state();
    f.inputs = {"y?"};
    f.transitions = {tr("A", "B", "y? x!")};
    f.transitions[0].guard = {{"flag", false}};
    f.transitions[0].assign = {{"flag", true}};
    auto text = to_promela(f);
    CHECK(text.find("bool flag = false;") != std::string::npos);
    CHECK(text.find(":: atomic { (flag == false) && rcv?[y] -> rcv?y; snd!x; flag = true; goto B }") != std::string::npos);
    CHECK(parse_model(text) == f);
}

TEST_CASE("hand-written minimal model parses") {
    const std::string text = R"(mtype = { m };
chan to_peer1 = [1] of { mtype };
chan to_peer2 = [1] of { mtype };
proctype Peer(chan rcv; chan snd) {
  goto IDLE;
IDLE:
  if
  :: atomic { snd!m; goto DONE }
  fi;
DONE:
  (false);
}
init { atomic { run Peer(to_peer1, to_peer2); run Peer(to_peer2, to_peer1) } }
)";
    auto f = parse_model(text);
    CHECK(f.states == std::vector<std::string>{"IDLE", "DONE"});
    CHECK(f.initial == "IDLE");
    CHECK(f.outputs == std::set<std::string>{"m!"});
    REQUIRE(f.transitions.size() == 1);
    CHECK(f.transitions[0] == tr("IDLE", "DONE", "m!"));
}

TEST_CASE("unknown constructs are rejected") {
    auto code_of = [](const std::string& text) {
        try {
            parse_model(text);
        } catch (const TranspileError& e) {
            return e.code();
        }
        return TranspileError::Code::empty_fsm;
    };
    CHECK(code_of("") == TranspileError::Code::unsupported_construct);
    CHECK(code_of("int x = 3;") == TranspileError::Code::unsupported_construct);
    auto text = to_promela(two_state());
    auto bad = text;
    bad.replace(bad.find("snd!x"), 5, "printf(\"hi\")");
    CHECK(code_of(bad) == TranspileError::Code::unsupported_construct);
    try {
        parse_model("int x;\n");
    } catch (const TranspileError& e) {
        CHECK(e.line() == 1);
    }
}

TEST_CASE("an FSM without states is refused") {
    Fsm f;
    try {
        (void)to_promela(f);
        FAIL("expected EmptyFsm");
    } catch (const TranspileError& e) {
        CHECK(e.code() == TranspileError::Code::empty_fsm);
    }
}

TEST_CASE("non-identifier names are mangled consistently") {
    Fsm f;
    f.states = {"SYN-SENT", "do", "9x"};
    f.outputs = {"a-b!"};
    f.initial = "SYN-SENT";
    f.transitions = {tr("SYN-SENT", "do", "a-b!"), tr("do", "9x", "eps")};
    auto text = to_promela(f);
    CHECK(text.find("SYN_SENT:") != std::string::npos);
    CHECK(text.find("S_do:") != std::string::npos);
    CHECK(text.find("S_9x:") != std::string::npos);
    CHECK(text.find("snd!a_b") != std::string::npos);
    auto back = parse_model(text);
    CHECK(back.states == std::vector<std::string>{"SYN_SENT", "S_do", "S_9x"});
    CHECK(back.transitions.size() == 2);
}

TEST_CASE("parsed canonical TCP reaches ESTABLISHED on both sides") {
    auto f = parse_model(to_promela(load_fsm(data_path("canonical_tcp.json"))));
    checker::System sys(f);
    const int est = sys.state_index("ESTABLISHED");
    REQUIRE(est >= 0);
    std::unordered_set<checker::Configuration, checker::ConfigurationHash> seen{sys.initial()};
    std::deque<checker::Configuration> todo{sys.initial()};
    bool found = false;
    while (!todo.empty() && !found) {
        auto c = todo.front();
        todo.pop_front();
        if (c.state[0] == est && c.state[1] == est) found = true;
        for (const auto& m : sys.peer_moves(c))
            if (seen.insert(m.next).second) todo.push_back(m.next);
    }
    CHECK(found);
}

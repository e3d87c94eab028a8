#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracle.hpp"
#include "protofsm/checker.hpp"

using namespace protofsm;
using namespace protofsm::checker;
using testsupport::random_model;
namespace oracle = testsupport::oracle;

namespace {

Transition tr(std::string from, std::string to, const std::string& label) {
    Transition t;
    t.from = std::move(from);
    t.to = std::move(to);
    t.label = Label::parse(label);
    return t;
}

// A counterexample must be a real path of the unattacked system.
void check_trace_is_path(const Fsm& fsm, const Verdict& v, int cap) {
    System sys(fsm, cap);
    REQUIRE_FALSE(v.counterexample.empty());
    auto strip = [](Configuration c) {
        c.monitor = 0;
        return c;
    };
    CHECK(strip(v.counterexample.front().config) == strip(sys.initial()));
    for (std::size_t i = 1; i < v.counterexample.size(); ++i) {
        auto from = strip(v.counterexample[i - 1].config), to = strip(v.counterexample[i].config);
        auto moves = sys.peer_moves(from);
        bool ok = moves.empty() ? from == to : std::any_of(moves.begin(), moves.end(), [&](const Move& m) {
            return strip(m.next) == to;
        });
        CHECK(ok);
    }
}

}  // namespace

TEST_CASE("property ids parse with Greek or ASCII names") {
    CHECK(parse_property_id("φ1") == PropertyId::phi1);
    CHECK(parse_property_id("theta4") == PropertyId::theta4);
    CHECK(parse_property_id("PHI3") == PropertyId::phi3);
    CHECK_FALSE(parse_property_id("phi9").has_value());
    CHECK(all_properties().size() == 8);
}

TEST_CASE("natural capacity is the widest send burst") {
    Fsm f;
    f.states = {"A"};
    f.outputs = {"x!", "y!"};
    f.initial = "A";
    CHECK(natural_capacity(f) == 1);
    f.transitions = {tr("A", "A", "x! y! x!")};
    CHECK(natural_capacity(f) == 3);
    f.transitions = {tr("A", "A", "x! y! x! y! x!")};
    CHECK(natural_capacity(f) == kMaxCapacity);
}

TEST_CASE("sends into a full channel are lost") {
    Fsm f;
    f.states = {"A", "B"};
    f.outputs = {"x!"};
    f.initial = "A";
    f.transitions = {tr("A", "B", "x! x!")};
    System sys(f, 1);
    auto moves = sys.peer_moves(sys.initial());
    REQUIRE(moves.size() == 2);
    CHECK(moves[0].next.qlen[1] == 1);
    CHECK(moves[0].next.state[0] == 1);
}

TEST_CASE("listening states discard unexpected heads") {
    Fsm f;
    f.states = {"L", "M"};
    f.inputs = {"a?", "b?"};
    f.outputs = {"b!"};
    f.initial = "L";
    f.transitions = {tr("L", "M", "a?")};
    System sys(f, 1);
    auto c = sys.initial();
    c.qlen[0] = 1;
    c.queue[0][0] = static_cast<std::uint8_t>(sys.message_index("b"));
    auto moves = sys.peer_moves(c);
    REQUIRE(moves.size() == 1);
    CHECK(moves[0].kind == Move::Kind::discard);
    CHECK(moves[0].next.qlen[0] == 0);
    // M listens for nothing, so the head stays put.
    c.state[0] = 1;
    CHECK(sys.peer_moves(c).empty());
}

TEST_CASE("timeouts fire only without progress, self-loops aside") {
    Fsm f;
    f.states = {"A", "B", "C"};
    f.initial = "A";
    f.transitions = {tr("A", "A", "eps"), tr("A", "C", "timeout")};
    System sys(f, 1);
    auto moves = sys.peer_moves(sys.initial());
    CHECK(std::count_if(moves.begin(), moves.end(), [](const Move& m) { return m.kind == Move::Kind::timeout; }) == 2);
    f.transitions.push_back(tr("A", "B", "eps"));
    System busy(f, 1);
    for (const auto& m : busy.peer_moves(busy.initial())) CHECK(m.kind != Move::Kind::timeout);
}

TEST_CASE("phi3 flags a deadlock outside CLOSED x CLOSED") {
    Fsm f;
    f.states = {"CLOSED", "SYN_SENT"};
    f.inputs = {"x?"};
    f.outputs = {"x!"};
    f.initial = "CLOSED";
    f.transitions = {tr("CLOSED", "SYN_SENT", "x!")};
    auto v = check(f, PropertyId::phi3, {1});
    CHECK_FALSE(v.holds);
    check_trace_is_path(f, v, 1);
    f.transitions.push_back(tr("SYN_SENT", "CLOSED", "timeout"));
    CHECK(check(f, PropertyId::phi3, {1}).holds);
}

TEST_CASE("vacuity reports unreachable triggers") {
    Fsm f;
    f.states = {"CLOSED", "TIME_WAIT"};
    f.initial = "CLOSED";
    CHECK(vacuous(f, PropertyId::theta2));
    f.transitions = {tr("CLOSED", "TIME_WAIT", "eps")};
    CHECK_FALSE(vacuous(f, PropertyId::theta2));
    CHECK_FALSE(check(f, PropertyId::theta2).holds);
}

TEST_CASE("state space bound is enforced") {
    auto f = load_fsm(data_path("canonical_tcp.json"));
    Bounds b;
    b.max_states = 10;
    CHECK_THROWS_AS(check(f, PropertyId::phi1, b), StateSpaceExceeded);
}

TEST_CASE("checker agrees with a brute-force oracle on random small models") {
    std::mt19937 rng(4242);
    const auto props = all_properties();
    std::map<std::string, std::array<int, 2>> outcomes;
    for (int iter = 0; iter < 200; ++iter) {
        auto f = random_model(rng);
        for (const auto& p : props) {
            CAPTURE(iter);
            CAPTURE(p.name);
            CAPTURE(to_json(f));
            auto v = check(f, p.id, {1});
            CHECK(v.holds == oracle::holds(f, p.id, 1));
            if (!v.holds) check_trace_is_path(f, v, 1);
            ++outcomes[p.name][v.holds];
        }
    }
    for (const auto& [name, seen] : outcomes) {
        CAPTURE(name);
        CHECK(seen[0] > 0);
        CHECK(seen[1] > 0);
    }
}

TEST_CASE("verdicts are deterministic") {
    std::mt19937 rng(99);
    for (int i = 0; i < 30; ++i) {
        auto f = random_model(rng);
        auto a = check(f, PropertyId::phi3, {1}), b = check(f, PropertyId::phi3, {1});
        CHECK(a.holds == b.holds);
        CHECK(a.explored == b.explored);
        REQUIRE(a.counterexample.size() == b.counterexample.size());
        for (std::size_t k = 0; k < a.counterexample.size(); ++k) {
            CHECK(a.counterexample[k].action == b.counterexample[k].action);
            CHECK(a.counterexample[k].config == b.counterexample[k].config);
        }
    }
}

TEST_CASE("synthesis is refused on unsupported or vacuous properties") {
    Fsm f;
    f.states = {"CLOSED", "TIME_WAIT"};
    f.initial = "CLOSED";
    auto vac = synthesize(f, "m", PropertyId::theta2);
    CHECK(vac.attackers.empty());
    CHECK(vac.note == "vacuous");
    f.transitions = {tr("CLOSED", "TIME_WAIT", "eps")};
    auto uns = synthesize(f, "m", PropertyId::theta2);
    CHECK(uns.attackers.empty());
    CHECK(uns.note == "unsupported");
}

TEST_CASE("synthesized attackers are unique, terminate and confirm on their own model") {
    std::mt19937 rng(777);
    int produced = 0;
    for (int iter = 0; iter < 200; ++iter) {
        auto f = random_model(rng);
        for (auto id : {PropertyId::phi1, PropertyId::phi3, PropertyId::theta2, PropertyId::theta4}) {
            Bounds b;
            b.channel_capacity = 1;
            b.max_daisy_steps = 3;
            b.max_attackers = 5;
            auto r = synthesize(f, "rand", id, b);
            CHECK(r.attackers.size() <= b.max_attackers);
            std::set<std::vector<std::string>> scripts;
            for (std::size_t k = 0; k < r.attackers.size(); ++k) {
                const auto& a = r.attackers[k];
                CAPTURE(to_json(f));
                CAPTURE(to_json(a));
                REQUIRE_FALSE(a.script.empty());
                CHECK(a.script.back().op == AttackAction::Op::exit);
                CHECK(a.provenance.index == static_cast<int>(k) + 1);
                std::vector<std::string> key;
                for (const auto& s : a.script) key.push_back(s.to_string());
                CHECK(scripts.insert(key).second);
                CHECK(confirm(a, f, id, b));
                CHECK(attacker_from_json(to_json(a)).script == a.script);
                ++produced;
            }
        }
    }
    CHECK(produced > 0);
}

TEST_CASE("replay rejects messages outside the canonical alphabet") {
    auto f = load_fsm(data_path("canonical_tcp.json"));
    Attacker a;
    a.script = {{AttackAction::Op::inject, "BOGUS", 0}, {AttackAction::Op::exit, "", -1}};
    CHECK_THROWS_AS(replay(a, f, PropertyId::phi1), AlphabetMismatch);
}

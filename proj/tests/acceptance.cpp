// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "oracle.hpp"
#include "protofsm/checker.hpp"
#include "protofsm/eval.hpp"
#include "protofsm/extract.hpp"
#include "protofsm/ir.hpp"

using namespace protofsm;

namespace {

struct Criterion {
    std::string name;
    double limit_s;  // 0: no runtime bound
    std::function<bool(std::ostream&)> body;
};

Transition tr(std::string from, std::string to, const std::string& label) {
    return {std::move(from), std::move(to), Label::parse(label), {}, {}, {}};
}

std::set<Transition> as_set(const std::vector<Transition>& v) { return {v.begin(), v.end()}; }

const std::vector<std::pair<std::string, std::string>> kGold{{"ir/tcp_gold.xml", "canonical_tcp.json"},
                                                            {"ir/dccp_gold.xml", "canonical_dccp.json"}};

bool grammar_round_trip(std::ostream& note) {
    bool ok = true;
    for (const auto& [file, _] : kGold) {
        const auto text = read_file(data_path(file));
        auto doc = ir::parse_ir(text, file);
        auto violations = ir::validate_ir(doc);
        auto once = ir::serialize_ir(doc);
        auto twice = ir::serialize_ir(ir::parse_ir(once, file));
        note << file << ": " << violations.size() << " violations, " << (once == text ? "byte-exact" : "DIFFERS") << "; ";
        ok = ok && violations.empty() && once == text && twice == once;
    }
    return ok;
}

bool canonical_fixtures(std::ostream& note) {
    auto tcp = load_fsm(data_path("canonical_tcp.json"));
    auto dccp = load_fsm(data_path("canonical_dccp.json"));
    note << "TCP " << tcp.states.size() << "/" << tcp.transitions.size() << ", DCCP " << dccp.states.size() << "/"
         << dccp.transitions.size();
    return tcp.states.size() == 11 && tcp.transitions.size() == 20 && dccp.states.size() == 9 &&
           dccp.transitions.size() == 34;
}

bool state_recovery(std::ostream& note) {
    bool ok = true;
    for (const auto& [ir_file, canon_file] : kGold) {
        auto fsm = extract::build_fsm(ir::load_ir(data_path(ir_file)));
        auto canon = load_fsm(data_path(canon_file));
        std::size_t found = 0;
        for (const auto& s : canon.states) found += fsm.has_state(s);
        note << canon_file << " " << found << "/" << canon.states.size() << "; ";
        ok = ok && found == canon.states.size();
    }
    return ok;
}

bool transition_recovery(std::ostream& note) {
    bool ok = true;
    for (const auto& [ir_file, canon_file] : kGold) {
        auto fsm = extract::build_fsm(ir::load_ir(data_path(ir_file)));
        auto r = eval::transition_compare(fsm, load_fsm(data_path(canon_file)));
        int cp = r.correct + r.partially_correct;
        note << canon_file << " C+P " << cp << "/" << r.canonical_count << " (C " << r.correct << ", P "
             << r.partially_correct << ", extracted " << r.extracted_count << "); ";
        ok = ok && cp >= 12;
    }
    return ok;
}

bool pruning_suite(std::ostream& note) {
    using extract::prune;
    bool ok = true;
    auto triple = prune({tr("s", "t", "x? y!"), tr("s", "t", "x?"), tr("s", "t", "y!")}, {"s", "t"}, {"x?"}, {"y!"});
    ok = ok && as_set(triple) == std::set<Transition>{tr("s", "t", "x? y!")};
    auto eps = prune({tr("s", "t", "eps"), tr("s", "t", "a!")}, {"s", "t"}, {}, {"a!"});
    ok = ok && as_set(eps) == std::set<Transition>{tr("s", "t", "a!")};

    std::mt19937 rng(20241016);
    const std::vector<std::string> states{"A", "B", "C"}, pool_states{"A", "B", "C", "Z"};
    const std::vector<std::string> events{"x?", "y!", "z?", "x!", "w?"};
    const std::set<std::string> in{"x?", "z?"}, out{"y!"};
    auto pick = [&](const auto& v) { return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)]; };
    int bad = 0;
    for (int iter = 0; iter < 1000; ++iter) {
        std::vector<Transition> x;
        for (int n = std::uniform_int_distribution<int>(0, 12)(rng); n > 0; --n) {
            int len = std::uniform_int_distribution<int>(-1, 3)(rng);
            std::string label = len == -1 ? "timeout" : len == 0 ? "eps" : "";
            for (int k = 0; k < len; ++k) label += (k ? " " : "") + pick(events);
            x.push_back(tr(pick(pool_states), pick(pool_states), label));
        }
        if (iter % 3 == 0) {
            auto s = pick(states), t = pick(states);
            for (const char* l : {"x? y!", "x?", "y!"}) x.push_back(tr(s, t, l));
        }
        auto once = prune(x, states, in, out);
        auto xs = as_set(x);
        bool subset = std::all_of(once.begin(), once.end(), [&](const Transition& t) { return xs.contains(t); });
        if (prune(once, states, in, out) != once || !subset) ++bad;
    }
    note << "examples " << (ok ? "exact" : "WRONG") << ", random sets violating idempotence/deflation: " << bad << "/1000";
    return ok && bad == 0;
}

bool oracle_equivalence(std::ostream& note) {
    std::mt19937 rng(4242);
    int mismatches = 0, verdicts = 0;
    for (int iter = 0; iter < 200; ++iter) {
        auto f = testsupport::random_model(rng);
        for (const auto& p : checker::all_properties()) {
            ++verdicts;
            mismatches += checker::check(f, p.id, {1}).holds != testsupport::oracle::holds(f, p.id, 1);
        }
    }
    note << verdicts << " verdicts on 200 models, " << mismatches << " mismatches";
    return mismatches == 0;
}

bool property_support(std::ostream& note) {
    bool ok = true;
    for (auto [file, props] : {std::pair{"canonical_tcp.json", checker::tcp_properties()},
                               std::pair{"canonical_dccp.json", checker::dccp_properties()}}) {
        auto f = load_fsm(data_path(file));
        note << file << ":";
        for (auto id : props) {
            auto v = checker::check(f, id);
            note << " " << checker::property(id).name << (v.holds ? "+" : "-");
            ok = ok && v.holds;
        }
        note << "; ";
    }
    return ok;
}

struct SynthOutcome {
    std::size_t candidates = 0;
    std::size_t confirmed = 0;
    std::vector<checker::Attacker> attackers;
};

SynthOutcome synth_confirm(const Fsm& model, const std::string& name, const Fsm& canonical, checker::PropertyId id) {
    SynthOutcome o;
    auto r = checker::synthesize(model, name, id);
    o.candidates = r.attackers.size();
    for (const auto& a : r.attackers) o.confirmed += checker::confirm(a, canonical, id);
    o.attackers = std::move(r.attackers);
    return o;
}

bool synthesis_confirmation(std::ostream& note) {
    using checker::PropertyId;
    auto tcp = load_fsm(data_path("canonical_tcp.json"));
    auto dccp = load_fsm(data_path("canonical_dccp.json"));
    bool ok = true;
    auto timed = [&](const Fsm& m, const std::string& name, PropertyId id, auto accept) {
        auto t0 = std::chrono::steady_clock::now();
        auto o = synth_confirm(m, name, m, id);
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool pass = accept(o) && s < 300;
        note << name << " " << checker::property(id).name << " " << o.confirmed << "/" << o.candidates << " confirmed ("
             << s << "s); ";
        ok = ok && pass;
    };
    timed(tcp, "TCP", PropertyId::phi1, [](const SynthOutcome& o) { return o.candidates >= 1 && o.confirmed == o.candidates; });
    timed(dccp, "DCCP", PropertyId::theta2, [](const SynthOutcome& o) { return o.confirmed >= 1; });
    timed(dccp, "DCCP", PropertyId::theta4, [](const SynthOutcome& o) { return o.confirmed >= 1; });
    timed(dccp, "DCCP", PropertyId::theta1, [](const SynthOutcome& o) { return o.confirmed == 0; });
    timed(dccp, "DCCP", PropertyId::theta3, [](const SynthOutcome& o) { return o.confirmed == 0; });
    return ok;
}

bool attack_replication(std::ostream& note) {
    auto canonical = load_fsm(data_path("canonical_tcp.json"));
    bool ok = false;
    for (auto [name, model] : {std::pair<std::string, Fsm>{"Gold", extract::build_fsm(ir::load_ir(data_path("ir/tcp_gold.xml")))},
                               std::pair<std::string, Fsm>{"Canonical", canonical}}) {
        auto r = checker::synthesize(model, "TCP." + name, checker::PropertyId::phi1);
        for (const auto& a : r.attackers) {
            const auto& s = a.script;
            bool single_ack = s.size() == 2 && s[0].op == checker::AttackAction::Op::inject && s[0].msg == "ACK" &&
                              s[1].op == checker::AttackAction::Op::exit;
            if (single_ack && checker::confirm(a, canonical, checker::PropertyId::phi1)) {
                note << a.name() << " [" << s[0].to_string() << " " << s[1].to_string() << "] confirmed; ";
                ok = true;
                break;
            }
        }
    }
    if (!ok) note << "no confirmed single inject(ACK) attacker";
    return ok;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"Grammar round-trip", 1.0, grammar_round_trip},
        {"Canonical fixtures", 0, canonical_fixtures},
        {"State recovery", 0, state_recovery},
        {"Transition recovery", 10.0, transition_recovery},
        {"Pruning unit suite", 0, pruning_suite},
        {"Checker oracle equivalence", 60.0, oracle_equivalence},
        {"Property support", 0, property_support},
        {"Synthesis + confirmation", 0, synthesis_confirmation},
        {"End-to-end attack replication", 0, attack_replication},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        std::ostringstream note;
        bool pass = false;
        auto t0 = std::chrono::steady_clock::now();
        try {
            pass = c.body(note);
        } catch (const std::exception& e) {
            note << "threw: " << e.what();
        }
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && s >= c.limit_s) {
            pass = false;
            note << " over the " << c.limit_s << "s limit";
        }
        failed += !pass;
        char secs[32];
        std::snprintf(secs, sizeof secs, "%.2fs", s);
        std::cout << (pass ? "PASS" : "FAIL") << " " << c.name << " (" << secs << "): " << note.str() << "\n";
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " acceptance criteria passed\n";
    return failed == 0 ? 0 : 1;
}

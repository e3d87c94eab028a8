#include "protofsm/extract.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "json.hpp"

namespace protofsm::extract {

namespace {

using ir::Node;
using ir::NodeKind;
using json = nlohmann::json;

constexpr int kMaxHops = 6;
constexpr std::size_t kMaxAlternatives = 16;

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_state(const Node& n) { return n.kind == NodeKind::def_state || n.kind == NodeKind::ref_state; }
bool is_event(const Node& n) { return n.kind == NodeKind::def_event || n.kind == NodeKind::ref_event; }
bool is_arg(const Node& n) {
    return n.kind == NodeKind::arg || n.kind == NodeKind::arg_source || n.kind == NodeKind::arg_target ||
           n.kind == NodeKind::arg_inter;
}

struct Mention {
    std::size_t begin;
    std::string name;
};

struct EventMention {
    std::size_t begin, end;
    Event ev;
};

// One level of the walk: the node, where it sits, and its path.
struct Frame {
    const Node* node;
    const std::vector<Node>* siblings;
    std::size_t index;
    std::string path;
};

class Extractor {
public:
    Extractor(const ir::Document& doc, const std::vector<std::string>& states) : doc_(doc), states_(states) {}

    std::vector<PotentialTransition> run(std::vector<TraceEntry>* trace) {
        trace_ = trace;
        std::vector<Frame> stack;
        walk(doc_.blocks, "", stack);
        return std::move(out_);
    }

private:
    const ir::Document& doc_;
    const std::vector<std::string>& states_;
    std::vector<TraceEntry>* trace_ = nullptr;
    std::vector<PotentialTransition> out_;

    std::string state_symbol(const Node& n) const {
        auto id = n.id();
        const auto* d = id ? doc_.state(*id) : nullptr;
        return d ? symbol(d->name) : std::string{};
    }

    void states_in(const Node& n, bool skip_args, std::vector<Mention>& acc) const {
        if (is_state(n)) {
            if (auto s = state_symbol(n); !s.empty()) acc.push_back({n.begin, s});
            return;
        }
        for (const auto& c : n.children) {
            if (skip_args && is_arg(c)) continue;
            states_in(c, skip_args, acc);
        }
    }

    void events_in(const Node& n, const Node* action, std::vector<EventMention>& acc) const {
        if (n.kind == NodeKind::action) action = &n;
        if (is_event(n)) {
            auto id = n.id();
            const auto* d = id ? doc_.event(*id) : nullptr;
            if (!d) return;
            auto t = ir::ref_event_type(n, action);
            if (t == ir::EventType::compute) return;
            acc.push_back({n.begin, n.end, {symbol(d->name), t == ir::EventType::receive ? Direction::receive : Direction::send}});
            return;
        }
        for (const auto& c : n.children) events_in(c, action, acc);
    }

    // States named by a phrase, honouring "any state" and "other than X".
    std::vector<std::string> resolve_states(const Node& n) const {
        std::vector<Mention> ms;
        states_in(n, false, ms);
        const std::string text = lower(doc_.span(n));
        std::size_t cut = std::string::npos;
        for (const char* kw : {"other than", "except"}) cut = std::min(cut, text.find(kw));
        if (cut != std::string::npos) {
            std::set<std::string> excluded;
            for (const auto& m : ms)
                if (m.begin >= n.begin + cut) excluded.insert(m.name);
            std::vector<std::string> r;
            for (const auto& s : states_)
                if (!excluded.contains(s)) r.push_back(s);
            return r;
        }
        for (const char* kw : {"any state", "all states", "every state"})
            if (text.find(kw) != std::string::npos) return states_;
        std::vector<std::string> r;
        for (const auto& m : ms) r.push_back(m.name);
        return r;
    }

    static void add_unique(std::vector<std::string>& v, const std::vector<std::string>& more) {
        for (const auto& s : more)
            if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
    }

    std::vector<std::string> trigger_states(const Node& control) const {
        std::vector<std::string> r;
        for (const auto* c : control.elements())
            if (c->kind == NodeKind::trigger) add_unique(r, resolve_states(*c));
        return r;
    }

    static bool has_timeout_word(std::string_view text) {
        const std::string t = lower(text);
        for (const char* kw : {"timeout", "times out", "timer expires"})
            if (t.find(kw) != std::string::npos) return true;
        return false;
    }

    static bool has_blank_line(std::string_view t) {
        for (std::size_t p = t.find('\n'); p != std::string_view::npos; p = t.find('\n', p + 1)) {
            std::size_t q = t.find_first_not_of(" \t\r", p + 1);
            if (q != std::string_view::npos && t[q] == '\n') return true;
        }
        return false;
    }

    // A one-line state heading just before the outermost block, e.g. "CLOSED STATE".
    std::vector<std::string> heading_states(const std::vector<Node>& siblings, std::size_t index) const {
        std::vector<std::string> r;
        for (std::size_t i = index; i-- > 0;) {
            const Node& n = siblings[i];
            if (n.kind == NodeKind::text) {
                if (has_blank_line(n.text) || (!r.empty() && n.text.find('\n') != std::string::npos)) break;
                continue;
            }
            if (!is_state(n)) break;
            if (auto s = state_symbol(n); !s.empty()) r.insert(r.begin(), s);
        }
        std::vector<std::string> dedup;
        add_unique(dedup, r);
        return dedup;
    }

    struct LabelResult {
        std::vector<Label> labels;
        bool disjunctive = false;
        int hops = 0;
    };

    std::vector<Label> expand(const std::vector<EventMention>& evs, bool& disjunctive) const {
        // Refs joined only by commas, whitespace and "or" form one run; a run
        // with at least one "or" is a set of alternatives.
        std::vector<std::vector<Event>> groups;
        std::vector<Event> run;
        bool run_or = false;
        auto flush = [&] {
            if (run_or) groups.push_back(run);
            else for (const auto& e : run) groups.push_back({e});
            run.clear();
            run_or = false;
        };
        for (std::size_t i = 0; i < evs.size(); ++i) {
            if (i > 0) {
                bool sep = evs[i].begin >= evs[i - 1].end, saw_or = false;
                const std::string gap =
                    sep ? lower(std::string_view(doc_.plain_text).substr(evs[i - 1].end, evs[i].begin - evs[i - 1].end)) : "";
                for (std::size_t p = 0; sep && p < gap.size();) {
                    const auto c = static_cast<unsigned char>(gap[p]);
                    if (c == ',' || std::isspace(c)) {
                        ++p;
                    } else if (gap.compare(p, 2, "or") == 0 &&
                               (p + 2 == gap.size() || !std::isalnum(static_cast<unsigned char>(gap[p + 2])))) {
                        saw_or = true;
                        p += 2;
                    } else {
                        sep = false;
                    }
                }
                if (!sep) flush();
                run_or = run_or || (sep && saw_or);
            }
            run.push_back(evs[i].ev);
        }
        flush();

        std::vector<std::vector<Event>> seqs{{}};
        for (const auto& g : groups) {
            if (g.size() > 1) disjunctive = true;
            std::vector<std::vector<Event>> next;
            for (const auto& s : seqs)
                for (const auto& e : g) {
                    if (next.size() >= kMaxAlternatives) break;
                    auto t = s;
                    t.push_back(e);
                    next.push_back(std::move(t));
                }
            seqs = std::move(next);
        }
        std::vector<Label> out;
        for (auto& s : seqs) {
            std::stable_partition(s.begin(), s.end(), [](const Event& e) { return e.dir == Direction::receive; });
            std::vector<Event> uniq;
            for (const auto& e : s)
                if (std::find(uniq.begin(), uniq.end(), e) == uniq.end()) uniq.push_back(e);
            Label l = Label::of(std::move(uniq));
            if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(std::move(l));
        }
        return out;
    }

    LabelResult extract_label(const Node& t, const std::vector<const Node*>& controls) const {
        LabelResult r;
        for (int h = 0; h <= kMaxHops; ++h) {
            std::vector<EventMention> evs;
            bool timeout = false;
            if (h == 0 && controls.empty()) {
                events_in(t, nullptr, evs);
                timeout = has_timeout_word(doc_.span(t));
            } else {
                if (static_cast<std::size_t>(h) >= controls.size()) break;
                const Node& c = *controls[h];
                for (const auto& child : c.children) {
                    bool take = child.kind == NodeKind::trigger || child.kind == NodeKind::action || (h == 0 && &child == &t);
                    if (!take) continue;
                    events_in(child, nullptr, evs);
                    if (child.kind == NodeKind::trigger || &child == &t) timeout = timeout || has_timeout_word(doc_.span(child));
                }
            }
            r.hops = h;
            if (!evs.empty()) {
                std::sort(evs.begin(), evs.end(), [](const auto& a, const auto& b) { return a.begin < b.begin; });
                r.labels = expand(evs, r.disjunctive);
                return r;
            }
            if (timeout) {
                r.labels = {Label::timeout()};
                return r;
            }
        }
        r.labels = {Label::epsilon()};
        return r;
    }

    void handle_transition(const Node& t, const std::string& path, const std::vector<Frame>& stack) {
        std::vector<const Node*> controls;
        for (auto it = stack.rbegin(); it != stack.rend(); ++it)
            if (it->node->kind == NodeKind::control) controls.push_back(it->node);

        TraceEntry tr;
        tr.block = path;

        std::vector<std::string> from, inter;
        std::string to;
        for (const auto& c : t.children) {
            if (c.kind == NodeKind::arg_source) {
                add_unique(from, resolve_states(c));
            } else if (c.kind == NodeKind::arg_target) {
                std::vector<Mention> ms;
                states_in(c, false, ms);
                if (!ms.empty()) to = ms.back().name;
            } else if (c.kind == NodeKind::arg_inter) {
                std::vector<Mention> ms;
                states_in(c, false, ms);
                for (const auto& m : ms) inter.push_back(m.name);
            }
        }
        tr.explicit_from = from;
        tr.explicit_to = to;
        tr.inter = inter;

        std::string child_to;
        {
            std::vector<Mention> ms;
            states_in(t, true, ms);
            if (!ms.empty()) child_to = ms.back().name;
        }

        // Context sources: triggers of the closest control, then further out.
        std::vector<std::string> outer;
        int hops = 0;
        for (const auto* c : controls) {
            outer = trigger_states(*c);
            if (!outer.empty()) break;
            if (++hops > kMaxHops) break;
        }
        if (outer.empty()) {
            if (!stack.empty()) {
                outer = heading_states(*stack.front().siblings, stack.front().index);
            } else {
                for (std::size_t i = 0; i < doc_.blocks.size(); ++i)
                    if (&doc_.blocks[i] == &t) outer = heading_states(doc_.blocks, i);
            }
            if (!outer.empty()) ++hops;
        }
        tr.outer = outer;
        tr.brk = hops > 0;

        auto lr = extract_label(t, controls);
        tr.hops = std::max(hops, lr.hops);
        tr.disjunctive = lr.disjunctive;
        for (std::size_t i = 0; i < lr.labels.size(); ++i)
            tr.label += (i ? " | " : "") + lr.labels[i].to_string();

        std::vector<std::string> sources = from.empty() ? outer : from;
        std::string target = to;
        if (target.empty()) target = child_to;
        if (target.empty() && !from.empty() && !outer.empty()) target = outer.front();

        if (!sources.empty() && !target.empty()) {
            for (const auto& lbl : lr.labels) {
                const std::size_t hopsn = inter.size() + 1;
                std::vector<Label> seg(hopsn, Label::epsilon());
                if (lbl.kind == LabelKind::events) {
                    const std::size_t k = lbl.events.size();
                    for (std::size_t i = 0; i < hopsn; ++i) {
                        std::vector<Event> part(lbl.events.begin() + static_cast<long>(i * k / hopsn),
                                                lbl.events.begin() + static_cast<long>((i + 1) * k / hopsn));
                        if (!part.empty()) seg[i] = Label::of(std::move(part));
                    }
                } else {
                    seg[0] = lbl;
                }
                for (const auto& s : sources) {
                    std::vector<std::string> chain{s};
                    chain.insert(chain.end(), inter.begin(), inter.end());
                    chain.push_back(target);
                    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
                        PotentialTransition p{chain[i], chain[i + 1], seg[i], path, lr.disjunctive};
                        tr.emitted.push_back(p.from + " --" + p.label.to_string() + "--> " + p.to);
                        out_.push_back(std::move(p));
                    }
                }
            }
        }
        if (trace_) trace_->push_back(std::move(tr));
    }

    void walk(const std::vector<Node>& nodes, const std::string& prefix, std::vector<Frame>& stack) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const Node& n = nodes[i];
            if (!n.is_element()) continue;
            std::string path = prefix + "/" + std::string(ir::kind_name(n.kind)) + "[" + std::to_string(i) + "]";
            if (n.kind == NodeKind::transition) {
                handle_transition(n, path, stack);
            } else if (n.kind == NodeKind::control) {
                if (!n.relevant()) continue;
                stack.push_back({&n, &nodes, i, path});
                walk(n.children, path, stack);
                stack.pop_back();
            }
        }
    }
};

}  // namespace

std::string symbol(std::string_view surface) {
    std::string s = ir::normalize_name(surface);
    std::replace(s.begin(), s.end(), ' ', '_');
    return s;
}

std::pair<std::vector<std::string>, std::string> extract_states(const ir::Document& doc) {
    if (doc.def_states.empty()) throw ExtractError("NoStatesFound: document defines no states");
    std::vector<std::string> states;
    for (const auto& d : doc.def_states) {
        auto s = symbol(d.name);
        if (std::find(states.begin(), states.end(), s) == states.end()) states.push_back(s);
    }

    // A definition's body is the rest of its sentence, cut short by the
    // next definition or a blank line.
    std::vector<std::size_t> starts;
    for (const auto& d : doc.def_states) starts.push_back(d.begin);
    std::sort(starts.begin(), starts.end());
    const std::string& pt = doc.plain_text;
    for (const auto& d : doc.def_states) {
        std::size_t stop = pt.size();
        auto nx = std::upper_bound(starts.begin(), starts.end(), d.begin);
        if (nx != starts.end()) stop = *nx;
        for (std::size_t p = d.end; p < stop; ++p) {
            if (pt[p] == '.' && (p + 1 == pt.size() || std::isspace(static_cast<unsigned char>(pt[p + 1])))) {
                stop = p;
                break;
            }
            if (pt[p] == '\n') {
                std::size_t q = pt.find_first_not_of(" \t\r", p + 1);
                if (q != std::string::npos && pt[q] == '\n') {
                    stop = p;
                    break;
                }
            }
        }
        std::string body = lower(std::string_view(pt).substr(d.end, stop > d.end ? stop - d.end : 0));
        if (body.find("initial") != std::string::npos || body.find("begin") != std::string::npos)
            return {states, symbol(d.name)};
    }
    return {states, states.front()};
}

std::pair<std::set<std::string>, std::set<std::string>> extract_alphabet(const ir::Document& doc) {
    std::set<std::string> in, out;
    auto visit = [&](auto&& self, const Node& n, const Node* action) -> void {
        if (n.kind == NodeKind::action) action = &n;
        if (is_event(n)) {
            auto id = n.id();
            const auto* d = id ? doc.event(*id) : nullptr;
            if (!d) return;
            auto t = ir::ref_event_type(n, action);
            if (t == ir::EventType::receive) in.insert(symbol(d->name) + "?");
            if (t == ir::EventType::send) out.insert(symbol(d->name) + "!");
            return;
        }
        for (const auto& c : n.children) self(self, c, action);
    };
    for (const auto& b : doc.blocks) visit(visit, b, nullptr);
    return {in, out};
}

std::vector<PotentialTransition> extract_transitions(const ir::Document& doc, const std::vector<std::string>& states,
                                                     const std::set<std::string>&, const std::set<std::string>&,
                                                     std::vector<TraceEntry>* trace) {
    return Extractor(doc, states).run(trace);
}

std::vector<Transition> prune(const std::vector<Transition>& candidates, const std::vector<std::string>& states,
                              const std::set<std::string>& inputs, const std::set<std::string>& outputs) {
    Fsm shape;
    shape.states = states;
    shape.inputs = inputs;
    shape.outputs = outputs;

    std::set<Transition> typed;
    for (const auto& t : candidates)
        if (type_checks(t, shape)) typed.insert(Transition{t.from, t.to, t.label, t.guard, t.assign, {}});

    // Call-and-response: s --x? y!--> s' explains s --x?--> s' and s --y!--> s'.
    std::set<Transition> noise;
    for (const auto& t : typed) {
        const auto& ev = t.label.events;
        for (std::size_t p = 1; t.label.kind == LabelKind::events && p < ev.size(); ++p) {
            Transition a = t, b = t;
            a.label = Label::of({ev.begin(), ev.begin() + static_cast<long>(p)});
            b.label = Label::of({ev.begin() + static_cast<long>(p), ev.end()});
            if (typed.contains(a) && typed.contains(b)) {
                noise.insert(a);
                noise.insert(b);
            }
        }
    }
    std::set<Transition> kept;
    for (const auto& t : typed)
        if (!noise.contains(t)) kept.insert(t);

    // Redundant epsilons.
    std::set<std::pair<std::string, std::string>> labelled;
    for (const auto& t : kept)
        if (!t.label.is_epsilon()) labelled.insert({t.from, t.to});
    std::vector<Transition> out;
    for (const auto& t : kept)
        if (!(t.label.is_epsilon() && labelled.contains({t.from, t.to}))) out.push_back(t);
    return out;
}

Fsm build_fsm(const ir::Document& doc, std::vector<TraceEntry>* trace) {
    Fsm f;
    std::tie(f.states, f.initial) = extract_states(doc);
    std::tie(f.inputs, f.outputs) = extract_alphabet(doc);
    auto pot = extract_transitions(doc, f.states, f.inputs, f.outputs, trace);
    std::vector<Transition> cand;
    cand.reserve(pot.size());
    for (const auto& p : pot) cand.push_back(p.as_transition());
    f.transitions = prune(cand, f.states, f.inputs, f.outputs);
    f.normalize();
    f.validate();
    return f;
}

std::string trace_to_json_lines(const std::vector<TraceEntry>& trace) {
    std::string out;
    for (const auto& e : trace) {
        json j = {{"block", e.block},     {"explicit_from", e.explicit_from}, {"explicit_to", e.explicit_to},
                  {"inter", e.inter},     {"context_states", e.outer},       {"label", e.label},
                  {"hops", e.hops},       {"brk", e.brk},                     {"disjunctive", e.disjunctive},
                  {"emitted", e.emitted}};
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace protofsm::extract

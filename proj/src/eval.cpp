#include "protofsm/eval.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"

namespace protofsm::eval {

using json = nlohmann::json;

TokenMetrics token_metrics(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    if (pred.size() != gold.size())
        throw EvalError(EvalError::Code::length_mismatch,
                        "LengthMismatch: " + std::to_string(pred.size()) + " predicted vs " + std::to_string(gold.size()) + " gold labels");
    TokenMetrics m;
    if (gold.empty()) return m;
    std::map<std::string, int> tp, fp, fn, support;
    std::set<std::string> labels;
    int hits = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        labels.insert(gold[i]);
        labels.insert(pred[i]);
        ++support[gold[i]];
        if (pred[i] == gold[i]) {
            ++hits;
            ++tp[gold[i]];
        } else {
            ++fp[pred[i]];
            ++fn[gold[i]];
        }
    }
    m.accuracy = static_cast<double>(hits) / static_cast<double>(gold.size());
    double macro = 0, weighted = 0;
    for (const auto& l : labels) {
        const double p = tp[l] + fp[l] ? static_cast<double>(tp[l]) / (tp[l] + fp[l]) : 0.0;
        const double r = tp[l] + fn[l] ? static_cast<double>(tp[l]) / (tp[l] + fn[l]) : 0.0;
        const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        m.per_label_f1[l] = f;
        macro += f;
        weighted += f * support[l];
    }
    m.macro_f1 = macro / static_cast<double>(labels.size());
    m.weighted_f1 = weighted / static_cast<double>(gold.size());
    return m;
}

namespace {

bool is_block(ir::NodeKind k) {
    using K = ir::NodeKind;
    return k == K::trigger || k == K::action || k == K::transition || k == K::variable || k == K::timer || k == K::error;
}

void collect_spans(const ir::Node& n, const std::string& text, std::vector<Span>& out) {
    if (is_block(n.kind)) {
        std::size_t b = n.begin, e = n.end;
        while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
        if (b < e) out.push_back({b, e, std::string(ir::kind_name(n.kind))});
    }
    for (const auto& c : n.children) collect_spans(c, text, out);
}

bool overlaps(const Span& a, const Span& b) { return a.begin < b.end && b.begin < a.end; }

}  // namespace

std::vector<Span> tagged_spans(const ir::Document& doc) {
    std::vector<Span> out;
    for (const auto& b : doc.blocks) collect_spans(b, doc.plain_text, out);
    std::sort(out.begin(), out.end(), [](const Span& a, const Span& b) {
        return std::tie(a.begin, a.end, a.type) < std::tie(b.begin, b.end, b.type);
    });
    return out;
}

std::vector<tagger::Label> phrase_labels(const ir::Document& doc, const std::vector<tagger::Phrase>& phrases) {
    auto spans = tagged_spans(doc);
    std::vector<tagger::Label> out;
    const Span* prev = nullptr;
    for (const auto& ph : phrases) {
        std::size_t p = ph.span.begin;
        while (p < ph.span.end && std::isspace(static_cast<unsigned char>(doc.plain_text[p]))) ++p;
        // Innermost block covering p: the latest-starting one.
        const Span* hit = nullptr;
        for (const auto& s : spans)
            if (s.begin <= p && p < s.end && (!hit || s.begin >= hit->begin)) hit = &s;
        if (!hit) {
            out.push_back(tagger::Label::outside());
        } else {
            auto t = *tagger::tag_type_from(hit->type);
            out.push_back(hit == prev ? tagger::Label::inside(t) : tagger::Label::begin(t));
        }
        prev = hit;
    }
    return out;
}

double ModeScore::precision(double pc) const { return actual() ? (correct + pc * partial) / actual() : 0.0; }
double ModeScore::recall(double pc) const { return possible() ? (correct + pc * partial) / possible() : 0.0; }
double ModeScore::f1(double pc) const {
    const double p = precision(pc), r = recall(pc);
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

SpanScore span_metrics(const std::vector<Span>& pred_in, const std::vector<Span>& gold_in) {
    auto order = [](const Span& a, const Span& b) { return std::tie(a.begin, a.end, a.type) < std::tie(b.begin, b.end, b.type); };
    auto pred = pred_in, gold = gold_in;
    std::sort(pred.begin(), pred.end(), order);
    std::sort(gold.begin(), gold.end(), order);

    SpanScore s;
    std::vector<bool> touched(gold.size(), false);
    for (const auto& p : pred) {
        auto exact = std::find(gold.begin(), gold.end(), p);
        if (exact != gold.end()) {
            touched[static_cast<std::size_t>(exact - gold.begin())] = true;
            ++s.strict.correct, ++s.exact.correct, ++s.partial.correct, ++s.type.correct;
            continue;
        }
        bool found = false;
        for (std::size_t i = 0; i < gold.size() && !found; ++i) {
            const Span& g = gold[i];
            if (!overlaps(p, g)) continue;
            found = true;
            touched[i] = true;
            ++s.strict.incorrect;
            if (g.begin == p.begin && g.end == p.end) {
                ++s.exact.correct, ++s.partial.correct, ++s.type.incorrect;
            } else {
                ++s.exact.incorrect, ++s.partial.partial;
                if (g.type == p.type) ++s.type.correct;
                else ++s.type.incorrect;
            }
        }
        if (!found) ++s.strict.spurious, ++s.exact.spurious, ++s.partial.spurious, ++s.type.spurious;
    }
    for (bool t : touched)
        if (!t) ++s.strict.missing, ++s.exact.missing, ++s.partial.missing, ++s.type.missing;
    return s;
}

SpanScore span_metrics(const ir::Document& pred, const ir::Document& gold) {
    if (pred.plain_text != gold.plain_text)
        throw EvalError(EvalError::Code::source_mismatch, "SourceMismatch: documents annotate different text");
    return span_metrics(tagged_spans(pred), tagged_spans(gold));
}

namespace {

bool shares_event(const Label& a, const Label& b) {
    for (const auto& e : a.events)
        if (std::find(b.events.begin(), b.events.end(), e) != b.events.end()) return true;
    return false;
}

}  // namespace

TransitionReport transition_compare(const Fsm& extracted, const Fsm& canonical) {
    std::vector<Transition> ext(extracted.transitions), can(canonical.transitions);
    std::sort(ext.begin(), ext.end());
    ext.erase(std::unique(ext.begin(), ext.end()), ext.end());
    std::sort(can.begin(), can.end());
    can.erase(std::unique(can.begin(), can.end()), can.end());

    TransitionReport r;
    r.canonical_count = static_cast<int>(can.size());
    r.extracted_count = static_cast<int>(ext.size());

    std::vector<int> ext_match(ext.size(), -1), can_match(can.size(), -1);
    for (std::size_t i = 0; i < ext.size(); ++i) {
        auto it = std::lower_bound(can.begin(), can.end(), ext[i]);
        if (it != can.end() && *it == ext[i]) {
            const auto j = static_cast<std::size_t>(it - can.begin());
            ext_match[i] = static_cast<int>(j);
            can_match[j] = static_cast<int>(i);
            r.correct_pairs.push_back({ext[i], can[j]});
        }
    }

    // Maximum bipartite matching over the partial edges that remain.
    std::vector<std::vector<std::size_t>> adj(ext.size());
    for (std::size_t i = 0; i < ext.size(); ++i) {
        if (ext_match[i] >= 0) continue;
        for (std::size_t j = 0; j < can.size(); ++j)
            if (can_match[j] < 0 && ext[i].from == can[j].from && ext[i].to == can[j].to && shares_event(ext[i].label, can[j].label))
                adj[i].push_back(j);
    }
    std::vector<int> partner(can.size(), -1);
    std::function<bool(std::size_t, std::vector<bool>&)> augment = [&](std::size_t i, std::vector<bool>& seen) {
        for (auto j : adj[i]) {
            if (seen[j]) continue;
            seen[j] = true;
            if (partner[j] < 0 || augment(static_cast<std::size_t>(partner[j]), seen)) {
                partner[j] = static_cast<int>(i);
                return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < ext.size(); ++i) {
        std::vector<bool> seen(can.size(), false);
        if (!adj[i].empty()) augment(i, seen);
    }
    for (std::size_t j = 0; j < can.size(); ++j)
        if (partner[j] >= 0) {
            ext_match[static_cast<std::size_t>(partner[j])] = static_cast<int>(j);
            can_match[j] = partner[j];
            r.partial_pairs.push_back({ext[static_cast<std::size_t>(partner[j])], can[j]});
        }

    for (std::size_t i = 0; i < ext.size(); ++i)
        if (ext_match[i] < 0) r.incorrect_list.push_back(ext[i]);
    for (std::size_t j = 0; j < can.size(); ++j)
        if (can_match[j] < 0) r.not_found_list.push_back(can[j]);
    r.correct = static_cast<int>(r.correct_pairs.size());
    r.partially_correct = static_cast<int>(r.partial_pairs.size());
    r.incorrect = static_cast<int>(r.incorrect_list.size());
    r.not_found = static_cast<int>(r.not_found_list.size());
    return r;
}

namespace {

json mode_json(const ModeScore& m, double pc) {
    return {{"correct", m.correct},     {"incorrect", m.incorrect}, {"partial", m.partial},
            {"missing", m.missing},     {"spurious", m.spurious},   {"possible", m.possible()},
            {"actual", m.actual()},     {"precision", m.precision(pc)}, {"recall", m.recall(pc)},
            {"f1", m.f1(pc)}};
}

std::string edge(const Transition& t) { return t.from + " --" + t.label.to_string() + "--> " + t.to; }

}  // namespace

std::string report_json(const SpanScore* spans, const TokenMetrics* tokens, const TransitionReport* tr) {
    json j = json::object();
    if (spans)
        j["spans"] = {{"strict", mode_json(spans->strict, 0.0)},
                      {"exact", mode_json(spans->exact, 0.0)},
                      {"partial", mode_json(spans->partial, 0.5)},
                      {"type", mode_json(spans->type, 0.5)}};
    if (tokens)
        j["tokens"] = {{"accuracy", tokens->accuracy},
                       {"weighted_f1", tokens->weighted_f1},
                       {"macro_f1", tokens->macro_f1},
                       {"per_label_f1", tokens->per_label_f1}};
    if (tr) {
        json pairs = json::object();
        auto list = [](const auto& v) {
            json a = json::array();
            for (const auto& t : v) a.push_back(edge(t));
            return a;
        };
        auto plist = [](const auto& v) {
            json a = json::array();
            for (const auto& [e, c] : v) a.push_back({{"extracted", edge(e)}, {"canonical", edge(c)}});
            return a;
        };
        j["transitions"] = {{"canonical_count", tr->canonical_count},
                            {"extracted_count", tr->extracted_count},
                            {"correct", tr->correct},
                            {"partially_correct", tr->partially_correct},
                            {"incorrect", tr->incorrect},
                            {"not_found", tr->not_found},
                            {"correct_pairs", plist(tr->correct_pairs)},
                            {"partial_pairs", plist(tr->partial_pairs)},
                            {"incorrect_list", list(tr->incorrect_list)},
                            {"not_found_list", list(tr->not_found_list)}};
    }
    return j.dump(2) + "\n";
}

std::string transition_table(const TransitionReport& r, const std::string& row_name) {
    const int w = std::max<int>(16, static_cast<int>(row_name.size()));
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s %9s %8s %8s %10s %9s %10s\n", w, "FSM", "Extracted", "Correct", "Partial",
                  "Incorrect", "NotFound", "Canonical");
    std::string out = buf;
    std::snprintf(buf, sizeof buf, "%-*s %9d %8d %8d %10d %9d %10d\n", w, row_name.substr(0, 200).c_str(),
                  r.extracted_count, r.correct, r.partially_correct, r.incorrect, r.not_found, r.canonical_count);
    return out + buf;
}

}  // namespace protofsm::eval

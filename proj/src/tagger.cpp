#include "protofsm/tagger.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace protofsm::tagger {

namespace {

constexpr std::string_view kBuiltinLexicon =
    "transition_verb\tmove\ntransition_verb\tenter\ntransition_verb\tgo\ntransition_verb\tleave\n"
    "transition_verb\treturn\ntransition_verb\ttransition\ntransition_verb\tchange\n"
    "send_verb\tsend\nsend_verb\tsent\nsend_verb\tform\nsend_verb\ttransmit\nsend_verb\tretransmit\n"
    "receive_verb\treceive\nreceive_verb\tarrive\n"
    "issue_verb\tissue\nissue_verb\tsignal\nissue_verb\tqueue\n"
    "source_prep\tfrom\ntarget_prep\tto\ntarget_prep\tinto\ninter_prep\tthrough\ninter_prep\tvia\n"
    "conditional\tif\nconditional\tthen\nconditional\twhen\nconditional\twhile\n"
    "passive_aux\tis\npassive_aux\tare\npassive_aux\tbe\npassive_aux\tbeen\npassive_aux\twas\npassive_aux\twere\n"
    "timer_word\ttimer\nerror_word\terror\n";

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool word_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || c == '-';
}

struct Word {
    Span span;
    std::string low;
};

// Words inside [b, e). A '.' between two word characters stays inside the
// word so dotted variable names survive.
std::vector<Word> words_in(std::string_view text, Span s) {
    std::vector<Word> out;
    std::size_t i = s.begin;
    while (i < s.end) {
        if (!word_char(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.end && (word_char(text[j]) || (text[j] == '.' && j + 1 < s.end && word_char(text[j + 1]) && j > i)))
            ++j;
        out.push_back({{i, j}, lower(text.substr(i, j - i))});
        i = j;
    }
    return out;
}

int indent_of(std::string_view text, std::size_t line_start) {
    int col = 0;
    for (std::size_t i = line_start; i < text.size(); ++i) {
        if (text[i] == ' ') ++col;
        else if (text[i] == '\t') col = (col / 8 + 1) * 8;
        else break;
    }
    return col;
}

bool blank_line(std::string_view text, std::size_t line_start) {
    for (std::size_t i = line_start; i < text.size() && text[i] != '\n'; ++i)
        if (!std::isspace(static_cast<unsigned char>(text[i]))) return false;
    return true;
}

Span trim(std::string_view text, Span s, std::string_view extra = "") {
    auto strip = [&](char c) { return std::isspace(static_cast<unsigned char>(c)) || extra.find(c) != std::string_view::npos; };
    while (s.begin < s.end && strip(text[s.begin])) ++s.begin;
    while (s.end > s.begin && strip(text[s.end - 1])) --s.end;
    return s;
}

bool has_upper(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return std::isupper(static_cast<unsigned char>(c)); });
}

bool is_action_verb(const Lexicon& lex, std::string_view w) {
    return lex.matches("send_verb", w) || lex.matches("receive_verb", w) || lex.matches("issue_verb", w);
}

std::optional<ActionType> verb_action(const Lexicon& lex, std::string_view w) {
    if (lex.matches("send_verb", w)) return ActionType::send;
    if (lex.matches("receive_verb", w)) return ActionType::receive;
    if (lex.matches("issue_verb", w)) return ActionType::issue;
    return std::nullopt;
}

bool is_prep(const Lexicon& lex, std::string_view w) {
    return lex.has("source_prep", w) || lex.has("target_prep", w) || lex.has("inter_prep", w);
}

}  // namespace

Lexicon Lexicon::parse(std::string_view text) {
    Lexicon lex;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw std::invalid_argument("lexicon line without tab: " + line);
        lex.add(line.substr(0, tab), lower(line.substr(tab + 1)));
    }
    return lex;
}

Lexicon Lexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const Lexicon& Lexicon::builtin() {
    static const Lexicon lex = parse(kBuiltinLexicon);
    return lex;
}

void Lexicon::add(const std::string& category, const std::string& word) { words_[category].insert(word); }

bool Lexicon::has(std::string_view category, std::string_view word) const {
    auto it = words_.find(category);
    return it != words_.end() && it->second.count(std::string(word));
}

bool Lexicon::matches(std::string_view category, std::string_view word) const {
    for (const auto& s : stems(word))
        if (has(category, s)) return true;
    return false;
}

const std::set<std::string>& Lexicon::words(std::string_view category) const {
    static const std::set<std::string> none;
    auto it = words_.find(category);
    return it == words_.end() ? none : it->second;
}

std::vector<std::string> stems(std::string_view word) {
    std::string w = lower(word);
    std::vector<std::string> out{w};
    auto strip = [&](std::string_view suf, bool add_e) {
        if (w.size() > suf.size() + 1 && w.compare(w.size() - suf.size(), suf.size(), suf) == 0) {
            std::string base = w.substr(0, w.size() - suf.size());
            out.push_back(base);
            if (add_e) out.push_back(base + "e");
        }
    };
    strip("s", false);
    strip("es", false);
    strip("ed", true);
    strip("ing", true);
    return out;
}

std::string_view tag_type_name(TagType t) {
    switch (t) {
        case TagType::trigger: return "trigger";
        case TagType::action: return "action";
        case TagType::transition: return "transition";
        case TagType::variable: return "variable";
        case TagType::timer: return "timer";
        case TagType::error: return "error";
    }
    return "trigger";
}

std::optional<TagType> tag_type_from(std::string_view name) {
    for (auto t : {TagType::trigger, TagType::action, TagType::transition, TagType::variable, TagType::timer, TagType::error})
        if (tag_type_name(t) == name) return t;
    return std::nullopt;
}

std::string Label::to_string() const {
    if (bio == Bio::O) return "O";
    return std::string(bio == Bio::B ? "B-" : "I-") + std::string(tag_type_name(type));
}

Label Label::parse(std::string_view s) {
    if (s == "O") return outside();
    if (s.size() > 2 && (s[0] == 'B' || s[0] == 'I') && s[1] == '-')
        if (auto t = tag_type_from(s.substr(2))) return {s[0] == 'B' ? Bio::B : Bio::I, *t};
    throw std::invalid_argument("bad label " + std::string(s));
}

std::string_view arg_role_tag(ArgRole r) {
    switch (r) {
        case ArgRole::arg: return "arg";
        case ArgRole::arg_source: return "arg_source";
        case ArgRole::arg_target: return "arg_target";
        case ArgRole::arg_inter: return "arg_inter";
    }
    return "arg";
}

std::vector<Phrase> segment_phrases(std::string_view text, const Lexicon& lex) {
    std::vector<Phrase> out;
    std::size_t start = std::string::npos;  // current phrase start
    bool conditional = false;
    int depth = 0;
    bool pending_paragraph = false;
    std::size_t line_start = 0;

    auto line_of = [&](std::size_t pos) {
        return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
    };
    auto close = [&](std::size_t end) {
        if (start == std::string::npos) return;
        Span s = trim(text, {start, end});
        if (s.end > s.begin) {
            auto ls = s.begin == 0 ? std::string_view::npos : text.rfind('\n', s.begin - 1);
            std::size_t lstart = ls == std::string_view::npos ? 0 : ls + 1;
            out.push_back({std::string(text.substr(s.begin, s.end - s.begin)), s, indent_of(text, lstart), line_of(s.begin),
                           pending_paragraph});
            pending_paragraph = false;
        }
        start = std::string::npos;
        conditional = false;
        depth = 0;
    };

    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            std::size_t next = i + 1;
            bool hard = next >= text.size() || blank_line(text, next) || indent_of(text, next) != indent_of(text, line_start);
            if (hard) {
                close(i);
                if (next < text.size() && blank_line(text, next)) pending_paragraph = true;
            }
            line_start = next;
            ++i;
            continue;
        }
        if (c == ':' || c == ';' ||
            (c == '.' && (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]))))) {
            close(i);
            ++i;
            continue;
        }
        if (word_char(c) && (i == 0 || !word_char(text[i - 1]))) {
            std::size_t j = i;
            while (j < text.size() && word_char(text[j])) ++j;
            std::string w = lower(text.substr(i, j - i));
            if (lex.has("conditional", w)) {
                close(i);
                start = i;
                conditional = true;
            } else if (start == std::string::npos) {
                start = i;
            }
            i = j;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (start == std::string::npos) start = i;
        if (c == '(') ++depth;
        if (c == ')' && depth > 0) --depth;
        if (c == ',' && conditional && depth == 0) {
            close(i + 1);
            ++i;
            continue;
        }
        ++i;
    }
    close(text.size());
    return out;
}

std::vector<Mention> find_mentions(std::string_view text, Span span, const ir::Dictionary& dict) {
    std::vector<Mention> out;
    auto ws = words_in(text, span);
    constexpr std::size_t kMaxWords = 4;
    std::size_t i = 0;
    while (i < ws.size()) {
        bool found = false;
        for (std::size_t n = std::min(kMaxWords, ws.size() - i); n >= 1 && !found; --n) {
            Span s{ws[i].span.begin, ws[i + n - 1].span.end};
            std::string surface(text.substr(s.begin, s.end - s.begin));
            std::string head(text.substr(s.begin, ws[i + n - 1].span.begin - s.begin));
            for (const auto& last : stems(text.substr(ws[i + n - 1].span.begin, ws[i + n - 1].span.end - ws[i + n - 1].span.begin))) {
                const auto* e = dict.lookup(head + last);
                // All-lowercase prose ("open", "closed") does not name an
                // upper-case protocol identifier.
                if (!e || e->kind == ir::EntryKind::variable) continue;
                if (!has_upper(surface) && has_upper(e->name)) continue;
                out.push_back({s, e->kind, e->id});
                i += n;
                found = true;
                break;
            }
        }
        if (!found) ++i;
    }
    return out;
}

namespace {

bool mentions_variable(std::string_view text, Span span, const ir::Dictionary& dict) {
    for (const auto& w : words_in(text, span)) {
        const auto* e = dict.lookup(text.substr(w.span.begin, w.span.end - w.span.begin));
        if (e && e->kind == ir::EntryKind::variable) return true;
    }
    return false;
}

}  // namespace

std::vector<LabeledPhrase> rule_tag(const std::vector<Phrase>& phrases, std::string_view source, const ir::Dictionary& dict,
                                    const Lexicon& lex) {
    std::vector<LabeledPhrase> out;
    for (const auto& p : phrases) {
        LabeledPhrase lp{p, Label::outside(), std::nullopt, {}, false};
        auto ms = find_mentions(source, p.span, dict);
        bool state = std::any_of(ms.begin(), ms.end(), [](const Mention& m) { return m.kind == ir::EntryKind::state; });
        bool event = std::any_of(ms.begin(), ms.end(), [](const Mention& m) { return m.kind == ir::EntryKind::event; });
        auto ws = words_in(source, p.span);
        auto any_word = [&](auto pred) { return std::any_of(ws.begin(), ws.end(), [&](const Word& w) { return pred(w.low); }); };

        if (state && any_word([&](const std::string& w) { return lex.matches("transition_verb", w) || is_prep(lex, w); })) {
            lp.label = Label::begin(TagType::transition);
            lp = attach_transition_args(std::move(lp), source, dict, lex);
        } else if (event && any_word([&](const std::string& w) { return is_action_verb(lex, w); })) {
            lp.label = Label::begin(TagType::action);
            lp = classify_action(std::move(lp), source, lex);
        } else if (state || event) {
            lp.label = Label::begin(TagType::trigger);
        } else if (mentions_variable(source, p.span, dict)) {
            lp.label = Label::begin(TagType::variable);
        } else if (any_word([&](const std::string& w) { return lex.matches("error_word", w); })) {
            lp.label = Label::begin(TagType::error);
        } else if (any_word([&](const std::string& w) { return lex.matches("timer_word", w); })) {
            lp.label = Label::begin(TagType::timer);
        }
        out.push_back(std::move(lp));
    }
    return out;
}

LabeledPhrase classify_action(LabeledPhrase lp, std::string_view source, const Lexicon& lex) {
    auto ws = words_in(source, lp.phrase.span);
    lp.attached_args.clear();
    for (std::size_t i = 0; i < ws.size(); ++i) {
        auto t = verb_action(lex, ws[i].low);
        if (!t) continue;
        // "the form", "a send": nouns, not verbs
        if (i > 0 && (ws[i - 1].low == "the" || ws[i - 1].low == "a" || ws[i - 1].low == "an" || ws[i - 1].low == "this")) continue;
        lp.action_type = t;
        lp.no_verb = false;
        Span arg;
        if (i > 0 && lex.has("passive_aux", ws[i - 1].low))
            arg = trim(source, {lp.phrase.span.begin, ws[i - 1].span.begin}, ",");
        else
            arg = trim(source, {ws[i].span.end, lp.phrase.span.end}, ".,;:");
        if (arg.end > arg.begin) lp.attached_args.push_back({arg, ArgRole::arg});
        return lp;
    }
    lp.action_type = ActionType::issue;
    lp.no_verb = true;
    return lp;
}

LabeledPhrase attach_transition_args(LabeledPhrase lp, std::string_view source, const ir::Dictionary& dict, const Lexicon& lex) {
    auto ws = words_in(source, lp.phrase.span);
    lp.attached_args.clear();
    auto boundary_word = [&](const std::string& w) {
        return is_prep(lex, w) || w == "possibly" || w == "and" || lex.has("conditional", w) || lex.matches("transition_verb", w);
    };
    for (std::size_t i = 0; i < ws.size(); ++i) {
        std::optional<ArgRole> role;
        const auto& w = ws[i].low;
        if (lex.has("source_prep", w)) role = ArgRole::arg_source;
        else if (lex.has("target_prep", w)) role = ArgRole::arg_target;
        else if (lex.has("inter_prep", w)) role = ArgRole::arg_inter;
        else {
            for (const auto& s : stems(w))
                if (s == "enter") role = ArgRole::arg_target;
        }
        if (!role) continue;

        std::size_t end = lp.phrase.span.end;
        for (std::size_t j = i + 1; j < ws.size(); ++j)
            if (boundary_word(ws[j].low)) {
                end = ws[j].span.begin;
                break;
            }
        for (std::size_t k = ws[i].span.end; k < end; ++k)
            if (source[k] == ',' || source[k] == ';') {
                end = k;
                break;
            }
        Span s = trim(source, {ws[i].span.end, end}, ".,;:");
        for (std::string_view article : {"the ", "a ", "an "}) {
            if (s.end - s.begin > article.size() && lower(source.substr(s.begin, article.size())) == article) {
                s = trim(source, {s.begin + article.size(), s.end});
                break;
            }
        }
        if (s.end <= s.begin) continue;
        bool has_state = false;
        for (const auto& m : find_mentions(source, s, dict)) has_state = has_state || m.kind == ir::EntryKind::state;
        bool says_state = false;
        for (const auto& x : words_in(source, s)) says_state = says_state || x.low == "state";
        if (has_state || says_state) lp.attached_args.push_back({s, *role});
    }
    return lp;
}

bool bio_consistent(const std::vector<Label>& labels) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].bio != Bio::I) continue;
        if (i == 0 || labels[i - 1].bio == Bio::O || labels[i - 1].type != labels[i].type) return false;
    }
    return true;
}

namespace {

struct Unit {
    const LabeledPhrase* phrase = nullptr;  // null for a control
    std::vector<Unit> children;             // controls only; first child is the trigger
    Span span;
    int indent = 0;
};

class Writer {
public:
    Writer(std::string_view source, const ir::Dictionary& dict, const Lexicon& lex) : src_(source), dict_(dict), lex_(lex) {}

    std::string run(const std::vector<Unit>& top) {
        emit_units(top, {0, src_.size()});
        return std::move(out_);
    }

private:
    void text(Span s) {
        for (std::size_t i = s.begin; i < s.end; ++i) {
            char c = src_[i];
            if (c == '&') out_ += "&amp;";
            else if (c == '<') out_ += "&lt;";
            else out_ += c;
        }
    }

    void emit_units(const std::vector<Unit>& units, Span within) {
        std::size_t pos = within.begin;
        for (const auto& u : units) {
            text({pos, u.span.begin});
            if (u.phrase) emit_phrase(*u.phrase);
            else {
                out_ += "<control>";
                emit_units(u.children, u.span);
                out_ += "</control>";
            }
            pos = u.span.end;
        }
        text({pos, within.end});
    }

    void ref(const Mention& m, const char* event_type) {
        bool first = seen_.insert({m.kind == ir::EntryKind::state, m.id}).second;
        std::string tag = std::string(first ? "def_" : "ref_") + (m.kind == ir::EntryKind::state ? "state" : "event");
        out_ += "<" + tag + " id=\"" + std::to_string(m.id) + "\"";
        if (!first && m.kind == ir::EntryKind::event) out_ += std::string(" type=\"") + event_type + "\"";
        out_ += ">";
        text(m.span);
        out_ += "</" + tag + ">";
    }

    void with_mentions(Span s, const std::vector<Mention>& ms, const char* event_type) {
        std::size_t pos = s.begin;
        for (const auto& m : ms) {
            if (m.span.begin < pos || m.span.end > s.end) continue;
            text({pos, m.span.begin});
            ref(m, event_type);
            pos = m.span.end;
        }
        text({pos, s.end});
    }

    void emit_phrase(const LabeledPhrase& lp) {
        const Span ps = lp.phrase.span;
        if (lp.label.bio == Bio::O) {
            text(ps);
            return;
        }
        auto ms = find_mentions(src_, ps, dict_);
        const char* etype = "compute";
        std::string open = "<" + std::string(tag_type_name(lp.label.type));
        if (lp.label.type == TagType::action) {
            auto t = lp.action_type.value_or(ActionType::issue);
            const char* names[] = {"send", "receive", "issue"};
            open += std::string(" type=\"") + names[static_cast<int>(t)] + "\"";
            etype = t == ActionType::send ? "send" : t == ActionType::receive ? "receive" : "compute";
        } else if (lp.label.type == TagType::trigger) {
            for (const auto& w : words_in(src_, ps))
                if (lex_.matches("receive_verb", w.low)) etype = "receive";
        }
        out_ += open + ">";
        // Args in order; a mention straddling an arg edge is left as text.
        auto args = lp.attached_args;
        std::sort(args.begin(), args.end(), [](const AttachedArg& a, const AttachedArg& b) { return a.span.begin < b.span.begin; });
        std::size_t pos = ps.begin;
        for (const auto& a : args) {
            if (a.span.begin < pos || a.span.end > ps.end) continue;
            std::vector<Mention> outside;
            for (const auto& m : ms)
                if (m.span.end <= a.span.begin && m.span.begin >= pos) outside.push_back(m);
            with_mentions({pos, a.span.begin}, outside, etype);
            std::vector<Mention> inside;
            for (const auto& m : ms)
                if (m.span.begin >= a.span.begin && m.span.end <= a.span.end) inside.push_back(m);
            std::string tag(arg_role_tag(a.role));
            out_ += "<" + tag + ">";
            with_mentions(a.span, inside, etype);
            out_ += "</" + tag + ">";
            pos = a.span.end;
        }
        std::vector<Mention> rest;
        for (const auto& m : ms)
            if (m.span.begin >= pos) rest.push_back(m);
        with_mentions({pos, ps.end}, rest, etype);
        out_ += "</" + std::string(tag_type_name(lp.label.type)) + ">";
    }

    std::string_view src_;
    const ir::Dictionary& dict_;
    const Lexicon& lex_;
    std::set<std::pair<bool, int>> seen_;
    std::string out_;
};

}  // namespace

ir::Document emit_ir(const std::vector<LabeledPhrase>& labeled, std::string_view source, const ir::Dictionary& dict,
                     const Lexicon& lex) {
    // Control scope: a trigger owns the phrases after it until one is less
    // indented, a sibling trigger appears at its indentation or less, or a
    // new paragraph starts at its indentation or less.
    std::vector<Unit> top;
    std::vector<Unit*> stack;
    auto extend = [&](const Span& s) {
        for (auto* c : stack) c->span.end = std::max(c->span.end, s.end);
    };
    for (const auto& lp : labeled) {
        const auto& p = lp.phrase;
        bool trigger = lp.label.bio != Bio::O && lp.label.type == TagType::trigger;
        while (!stack.empty()) {
            const Unit& c = *stack.back();
            bool closes = p.indent < c.indent || (p.paragraph_start && p.indent <= c.indent) || (trigger && p.indent <= c.indent);
            if (!closes) break;
            stack.pop_back();
        }
        auto& siblings = stack.empty() ? top : stack.back()->children;
        if (trigger) {
            Unit ctl;
            ctl.span = p.span;
            ctl.indent = p.indent;
            ctl.children.push_back({&lp, {}, p.span, p.indent});
            siblings.push_back(std::move(ctl));
            extend(p.span);
            stack.push_back(&siblings.back());
        } else {
            siblings.push_back({&lp, {}, p.span, p.indent});
            extend(p.span);
        }
    }
    Writer w(source, dict, lex);
    return ir::parse_ir(w.run(top));
}

ir::Dictionary load_seed_dictionary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    ir::Dictionary d;
    int next_state = 0, next_event = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw std::invalid_argument("seed line without tab: " + line);
        auto kind = line.substr(0, tab);
        auto name = line.substr(tab + 1);
        if (kind == "state") d.add({ir::EntryKind::state, next_state++, name, std::nullopt});
        else if (kind == "event") d.add({ir::EntryKind::event, next_event++, name, std::nullopt});
        else if (kind == "variable") d.add({ir::EntryKind::variable, -1, name, std::nullopt});
        else throw std::invalid_argument("unknown seed kind: " + kind);
    }
    return d;
}

}  // namespace protofsm::tagger

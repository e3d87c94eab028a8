#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "protofsm/checker.hpp"
#include "protofsm/eval.hpp"
#include "protofsm/extract.hpp"
#include "protofsm/fsm.hpp"
#include "protofsm/ir.hpp"
#include "protofsm/tagger.hpp"
#include "protofsm/transpile.hpp"

#ifndef PROTOFSM_VERSION
#define PROTOFSM_VERSION "0.0.0"
#endif

namespace protofsm::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Raised for failures that map to exit code 2.
struct ValidationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationFailure("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// File name up to its first dot: "tcp.fsm.json" -> "tcp".
std::string base_name(const std::string& path) {
    auto name = fs::path(path).filename().string();
    auto dot = name.find('.');
    return dot == std::string::npos || dot == 0 ? name : name.substr(0, dot);
}

struct Options {
    std::string out_dir = "out";
    std::string format = "text";
    int capacity = 0;
    std::size_t max_states = 1'000'000;
    int max_daisy_steps = 8;
    std::size_t max_attackers = 100;

    checker::Bounds bounds() const {
        checker::Bounds b;
        b.channel_capacity = capacity;
        b.max_states = max_states;
        b.max_daisy_steps = max_daisy_steps;
        b.max_attackers = max_attackers;
        return b;
    }
};

// Tracks what a run read and wrote so the manifest can describe it.
class Run {
public:
    Run(const Options& opt, std::string command, std::vector<std::string> args)
        : opt_(opt), command_(std::move(command)), args_(std::move(args)) {}

    std::string input(const std::string& path) {
        auto text = read_text(path);
        inputs_.push_back({{"path", path}, {"bytes", text.size()}, {"fnv1a64", fnv1a(text)}});
        return text;
    }

    std::string write(const std::string& rel, const std::string& content) {
        fs::path p = fs::path(opt_.out_dir) / rel;
        fs::create_directories(p.parent_path());
        std::ofstream of(p, std::ios::binary);
        of << content;
        if (!of) throw ValidationFailure("cannot write " + p.string());
        outputs_.push_back(p.string());
        return p.string();
    }

    void manifest(const std::string& config_path) {
        ordered_json m;
        m["tool"] = "protofsm";
        m["version"] = PROTOFSM_VERSION;
        m["command"] = command_;
        m["args"] = args_;
        m["config"] = config_path;
        m["inputs"] = inputs_;
        m["outputs"] = outputs_;
        auto b = opt_.bounds();
        m["bounds"] = {{"channel_capacity", b.channel_capacity},
                       {"max_states", b.max_states},
                       {"max_daisy_steps", b.max_daisy_steps},
                       {"max_attackers", b.max_attackers}};
        write(command_ + ".manifest.json", m.dump(2) + "\n");
    }

private:
    const Options& opt_;
    std::string command_;
    std::vector<std::string> args_;
    std::vector<ordered_json> inputs_;
    std::vector<std::string> outputs_;
};

struct Result {
    ordered_json summary;
    std::string text;
};

ordered_json verdict_json(const checker::Verdict& v) {
    return {{"holds", v.holds}, {"vacuous", v.vacuous}, {"explored", v.explored},
            {"counterexample_length", v.counterexample.size()}};
}

ir::Document load_doc(Run& run, const std::string& path) {
    auto doc = ir::parse_ir(run.input(path), path);
    auto violations = ir::validate_ir(doc);
    if (!violations.empty()) {
        std::ostringstream os;
        os << path << ": " << violations.size() << " grammar violation(s)";
        for (const auto& v : violations) os << "\n  " << v.rule << " at " << v.path << " line " << v.line << ": " << v.message;
        throw ValidationFailure(os.str());
    }
    return doc;
}

Fsm load_model(Run& run, const std::string& path) {
    auto f = fsm_from_json(run.input(path));
    f.validate();
    return f;
}

// ---- tag

struct TagArgs {
    std::string text;
    std::string seeds;
    std::string defs;
    std::string lexicon;
};

Result cmd_tag(Run& run, const TagArgs& a, std::string* ir_path = nullptr) {
    auto text = run.input(a.text);
    ir::Dictionary dict;
    if (!a.seeds.empty()) {
        run.input(a.seeds);
        dict = tagger::load_seed_dictionary(a.seeds);
    }
    if (!a.defs.empty()) {
        const auto defs = ir::def_dictionary(ir::parse_ir(run.input(a.defs), a.defs));
        for (const auto& [_, e] : defs.entries())
            if (!dict.lookup(e.name)) dict.add(e);
    }
    tagger::Lexicon custom;
    if (!a.lexicon.empty()) custom = tagger::Lexicon::parse(run.input(a.lexicon));
    const auto& lex = a.lexicon.empty() ? tagger::Lexicon::builtin() : custom;

    auto labeled = tagger::rule_tag(tagger::segment_phrases(text, lex), text, dict, lex);
    auto doc = tagger::emit_ir(labeled, text, dict, lex);
    auto violations = ir::validate_ir(doc);
    auto path = run.write(base_name(a.text) + ".xml", ir::serialize_ir(doc));
    if (ir_path) *ir_path = path;

    int tagged = 0;
    for (const auto& lp : labeled) tagged += lp.label.bio != tagger::Bio::O;
    Result r;
    r.summary = {{"command", "tag"}, {"input", a.text}, {"output", path}, {"phrases", labeled.size()},
                 {"tagged_phrases", tagged}, {"blocks", doc.blocks.size()}, {"violations", violations.size()}};
    std::ostringstream os;
    os << "tagged " << tagged << " of " << labeled.size() << " phrases -> " << path << "\n";
    if (!violations.empty()) os << violations.size() << " grammar violation(s) in the emitted IR\n";
    r.text = os.str();
    return r;
}

// ---- extract

Result cmd_extract(Run& run, const std::string& ir_path, Fsm* out_fsm = nullptr, std::string* fsm_path = nullptr) {
    auto doc = load_doc(run, ir_path);
    std::vector<extract::TraceEntry> trace;
    auto fsm = extract::build_fsm(doc, &trace);
    const auto stem = base_name(ir_path);
    auto jpath = run.write(stem + ".fsm.json", to_json(fsm));
    auto dpath = run.write(stem + ".dot", to_dot(fsm, stem));
    auto tpath = run.write(stem + ".trace.jsonl", extract::trace_to_json_lines(trace));
    if (out_fsm) *out_fsm = fsm;
    if (fsm_path) *fsm_path = jpath;
    Result r;
    r.summary = {{"command", "extract"}, {"input", ir_path}, {"fsm", jpath}, {"dot", dpath}, {"trace", tpath},
                 {"states", fsm.states.size()}, {"initial", fsm.initial}, {"transitions", fsm.transitions.size()}};
    std::ostringstream os;
    os << fsm.states.size() << " states, " << fsm.transitions.size() << " transitions, initial " << fsm.initial << " -> "
       << jpath << "\n";
    r.text = os.str();
    return r;
}

// ---- evaluate

std::vector<std::string> phrase_label_strings(const ir::Document& doc, const std::vector<tagger::Phrase>& phrases) {
    std::vector<std::string> out;
    for (const auto& l : eval::phrase_labels(doc, phrases)) out.push_back(l.to_string());
    return out;
}

Result cmd_evaluate(Run& run, const std::string& pred_path, const std::string& gold_path, const std::string& canonical) {
    auto pred = load_doc(run, pred_path);
    auto gold = load_doc(run, gold_path);
    auto spans = eval::span_metrics(pred, gold);
    auto phrases = tagger::segment_phrases(gold.plain_text);
    auto tokens = eval::token_metrics(phrase_label_strings(pred, phrases), phrase_label_strings(gold, phrases));
    std::optional<eval::TransitionReport> tr;
    if (!canonical.empty()) tr = eval::transition_compare(extract::build_fsm(pred), load_model(run, canonical));
    auto report = eval::report_json(&spans, &tokens, tr ? &*tr : nullptr);
    auto path = run.write("report.json", report);

    Result r;
    r.summary = {{"command", "evaluate"}, {"report", path}, {"metrics", ordered_json::parse(report)}};
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "phrase accuracy " << tokens.accuracy << ", weighted F1 " << tokens.weighted_f1 << ", macro F1 "
       << tokens.macro_f1 << "\n";
    os << "span F1 strict " << spans.strict.f1(0) << ", exact " << spans.exact.f1(0) << ", partial "
       << spans.partial.f1(0.5) << ", type " << spans.type.f1(0.5) << "\n";
    if (tr) os << eval::transition_table(*tr, base_name(pred_path));
    os << "report -> " << path << "\n";
    r.text = os.str();
    return r;
}

// ---- transpile

Result cmd_transpile(Run& run, const Fsm& fsm, const std::string& name, int capacity) {
    auto path = run.write(name + ".pml", transpile::to_promela(fsm, capacity));
    Result r;
    r.summary = {{"command", "transpile"}, {"output", path}, {"states", fsm.states.size()},
                 {"capacity", capacity > 0 ? capacity : checker::natural_capacity(fsm)}};
    r.text = "promela -> " + path + "\n";
    return r;
}

// ---- synthesize

std::vector<checker::PropertyId> parse_properties(const std::vector<std::string>& names, const Fsm& model) {
    std::vector<checker::PropertyId> out;
    for (const auto& n : names) {
        if (n == "tcp" || n == "dccp") {
            auto set = n == "tcp" ? checker::tcp_properties() : checker::dccp_properties();
            out.insert(out.end(), set.begin(), set.end());
        } else if (auto id = checker::parse_property_id(n)) {
            out.push_back(*id);
        } else {
            throw CLI::ValidationError("--property", "unknown property '" + n + "'");
        }
    }
    if (out.empty()) out = model.has_state("ESTABLISHED") ? checker::tcp_properties() : checker::dccp_properties();
    return out;
}

Result cmd_synthesize(Run& run, const Options& opt, const Fsm& model, const std::string& name,
                      const std::vector<checker::PropertyId>& props, const std::optional<Fsm>& canonical) {
    const auto bounds = opt.bounds();
    Result r;
    r.summary = {{"command", "synthesize"}, {"model", name}, {"properties", ordered_json::array()}};
    std::ostringstream os;
    for (auto id : props) {
        const auto& prop = checker::property(id);
        auto res = checker::synthesize(model, name, id, bounds);
        ordered_json entry = {{"property", prop.name}, {"support", verdict_json(res.support)}, {"note", res.note},
                              {"candidates", res.attackers.size()}};
        int confirmed = 0;
        ordered_json attackers = ordered_json::array();
        for (const auto& a : res.attackers) {
            auto file = run.write("attackers/" + a.name() + ".json", checker::to_json(a));
            std::string script;
            for (const auto& s : a.script) script += (script.empty() ? "" : " ") + s.to_string();
            ordered_json aj = {{"name", a.name()}, {"file", file}, {"script", script}};
            if (canonical) {
                try {
                    bool ok = checker::confirm(a, *canonical, id, bounds);
                    confirmed += ok;
                    aj["confirmed"] = ok;
                } catch (const checker::AlphabetMismatch& e) {
                    aj["confirmed"] = false;
                    aj["note"] = e.what();
                }
            }
            attackers.push_back(aj);
        }
        entry["confirmed"] = canonical ? ordered_json(confirmed) : ordered_json(nullptr);
        entry["attackers"] = attackers;
        os << name << " " << prop.name << ": " << (res.support.holds ? "supported" : "unsupported")
           << (res.support.holds && res.support.vacuous ? " (vacuous)" : "") << ", " << res.attackers.size() << " candidate(s)";
        if (canonical) os << ", " << confirmed << " confirmed";
        os << "\n";
        r.summary["properties"].push_back(entry);
    }
    r.text = os.str();
    run.write("synthesis.json", r.summary.dump(2) + "\n");
    return r;
}

// ---- confirm

Result cmd_confirm(Run& run, const Options& opt, const std::string& attacker_path, const std::string& canonical_path,
                   const std::string& property) {
    auto attacker = checker::attacker_from_json(run.input(attacker_path));
    auto canonical = load_model(run, canonical_path);
    auto name = property.empty() ? attacker.provenance.property : property;
    auto id = checker::parse_property_id(name);
    if (!id) throw CLI::ValidationError("--property", "unknown property '" + name + "'");
    auto v = checker::replay(attacker, canonical, *id, opt.bounds());
    Result r;
    r.summary = {{"command", "confirm"}, {"attacker", attacker.name()}, {"property", checker::property(*id).name},
                 {"confirmed", !v.holds}, {"verdict", verdict_json(v)}};
    if (!v.holds) {
        checker::System sys(canonical, opt.capacity);
        r.summary["trace"] = run.write(attacker.name() + ".trace.jsonl", checker::trace_to_json_lines(sys, v.counterexample));
    }
    run.write("confirm.json", r.summary.dump(2) + "\n");
    r.text = attacker.name() + (v.holds ? " not confirmed" : " confirmed") + " against " + canonical_path + " for " +
             checker::property(*id).name + "\n";
    return r;
}

void emit(const Options& opt, const Result& r, std::ostream& out) {
    if (opt.format == "json") out << r.summary.dump(2) << "\n";
    else out << r.text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Protocol FSM extraction, checking and attacker synthesis", "protofsm"};
    app.set_version_flag("--version", PROTOFSM_VERSION);
    app.set_config("--config", "", "TOML-style config file; command line flags win");
    app.require_subcommand(1);

    Options opt;
    app.add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    app.add_option("--format", opt.format, "Summary format on stdout")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();
    app.add_option("--capacity", opt.capacity, "Channel capacity, 0 for the model's natural capacity")
        ->check(CLI::Range(0, checker::kMaxCapacity))
        ->capture_default_str();
    app.add_option("--max-states", opt.max_states, "Configuration bound")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--max-daisy-steps", opt.max_daisy_steps, "Attacker inject/drop budget")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--max-attackers", opt.max_attackers, "Attackers kept per property")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    TagArgs tag;
    auto* sc_tag = app.add_subcommand("tag", "Rule-based tagging of plain text into annotated XML");
    sc_tag->add_option("text", tag.text, "Plain text file")->required()->check(CLI::ExistingFile);
    sc_tag->add_option("--seeds", tag.seeds, "Seed dictionary (kind<TAB>NAME lines)")->check(CLI::ExistingFile);
    sc_tag->add_option("--defs", tag.defs, "Annotated XML whose definitions seed the dictionary")->check(CLI::ExistingFile);
    sc_tag->add_option("--lexicon", tag.lexicon, "Lexicon replacing the built-in word lists")->check(CLI::ExistingFile);

    std::string ir_in;
    auto* sc_extract = app.add_subcommand("extract", "Build an FSM from annotated XML");
    sc_extract->add_option("ir", ir_in, "Annotated XML")->required()->check(CLI::ExistingFile);

    std::string pred_ir, gold_ir, canonical;
    auto* sc_eval = app.add_subcommand("evaluate", "Score predicted annotations and the FSM they yield");
    sc_eval->add_option("pred", pred_ir, "Predicted XML")->required()->check(CLI::ExistingFile);
    sc_eval->add_option("gold", gold_ir, "Gold XML")->required()->check(CLI::ExistingFile);
    sc_eval->add_option("--canonical", canonical, "Canonical FSM JSON for the transition table")->check(CLI::ExistingFile);

    std::string fsm_in, name;
    auto* sc_transpile = app.add_subcommand("transpile", "Emit a two-peer Promela model");
    sc_transpile->add_option("fsm", fsm_in, "FSM JSON")->required()->check(CLI::ExistingFile);

    std::vector<std::string> props;
    auto* sc_synth = app.add_subcommand("synthesize", "Synthesize attackers and confirm them");
    sc_synth->add_option("fsm", fsm_in, "FSM JSON")->required()->check(CLI::ExistingFile);
    sc_synth->add_option("-p,--property", props, "phi1..phi4, theta1..theta4, tcp or dccp");
    sc_synth->add_option("--canonical", canonical, "Canonical FSM JSON to confirm against")->check(CLI::ExistingFile);
    sc_synth->add_option("--name", name, "Model name used in attacker names");

    std::string attacker_in, property;
    auto* sc_confirm = app.add_subcommand("confirm", "Replay an attacker against a canonical model");
    sc_confirm->add_option("attacker", attacker_in, "Attacker JSON")->required()->check(CLI::ExistingFile);
    sc_confirm->add_option("--canonical", canonical, "Canonical FSM JSON")->required()->check(CLI::ExistingFile);
    sc_confirm->add_option("-p,--property", property, "Property, defaults to the attacker's own");

    std::string gold_for_pipeline;
    auto* sc_pipe = app.add_subcommand("pipeline", "tag, extract, evaluate, transpile, synthesize and confirm");
    auto* pipe_text = sc_pipe->add_option("--text", tag.text, "Plain text input")->check(CLI::ExistingFile);
    auto* pipe_ir = sc_pipe->add_option("--ir", ir_in, "Annotated XML input")->check(CLI::ExistingFile);
    pipe_text->excludes(pipe_ir);
    sc_pipe->add_option("--seeds", tag.seeds, "Seed dictionary for tagging")->check(CLI::ExistingFile);
    sc_pipe->add_option("--defs", tag.defs, "Annotated XML whose definitions seed the dictionary")->check(CLI::ExistingFile);
    sc_pipe->add_option("--lexicon", tag.lexicon, "Lexicon for tagging")->check(CLI::ExistingFile);
    sc_pipe->add_option("--gold", gold_for_pipeline, "Gold XML to score against")->check(CLI::ExistingFile);
    sc_pipe->add_option("--canonical", canonical, "Canonical FSM JSON")->check(CLI::ExistingFile);
    sc_pipe->add_option("-p,--property", props, "Properties to synthesize for");
    sc_pipe->add_option("--name", name, "Model name used in attacker names");

    std::vector<const char*> argv{"protofsm"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? ok : usage;
    }

    const auto* chosen = app.get_subcommands().front();
    Run run(opt, chosen->get_name(), args);
    std::string config_path;
    if (auto* c = app.get_config_ptr(); c && c->count()) config_path = c->as<std::string>();
    try {
        if (chosen == sc_tag) {
            emit(opt, cmd_tag(run, tag), out);
        } else if (chosen == sc_extract) {
            emit(opt, cmd_extract(run, ir_in), out);
        } else if (chosen == sc_eval) {
            emit(opt, cmd_evaluate(run, pred_ir, gold_ir, canonical), out);
        } else if (chosen == sc_transpile) {
            emit(opt, cmd_transpile(run, load_model(run, fsm_in), base_name(fsm_in), opt.capacity), out);
        } else if (chosen == sc_synth) {
            auto model = load_model(run, fsm_in);
            std::optional<Fsm> canon;
            if (!canonical.empty()) canon = load_model(run, canonical);
            emit(opt, cmd_synthesize(run, opt, model, name.empty() ? base_name(fsm_in) : name, parse_properties(props, model), canon),
                 out);
        } else if (chosen == sc_confirm) {
            emit(opt, cmd_confirm(run, opt, attacker_in, canonical, property), out);
        } else if (chosen == sc_pipe) {
            if (tag.text.empty() && ir_in.empty()) throw CLI::RequiredError("--text or --ir");
            ordered_json steps = ordered_json::array();
            std::string text;
            auto step = [&](const Result& r) {
                steps.push_back(r.summary);
                text += r.text;
            };
            if (!tag.text.empty()) step(cmd_tag(run, tag, &ir_in));
            Fsm model;
            step(cmd_extract(run, ir_in, &model));
            if (!gold_for_pipeline.empty()) step(cmd_evaluate(run, ir_in, gold_for_pipeline, canonical));
            const auto model_name = name.empty() ? base_name(ir_in) : name;
            step(cmd_transpile(run, model, model_name, opt.capacity));
            std::optional<Fsm> canon;
            if (!canonical.empty()) canon = load_model(run, canonical);
            step(cmd_synthesize(run, opt, model, model_name, parse_properties(props, canon ? *canon : model), canon));
            emit(opt, {{{"command", "pipeline"}, {"steps", steps}}, text}, out);
        }
        run.manifest(config_path);
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << "\n";
        return usage;
    } catch (const checker::StateSpaceExceeded& e) {
        err << "error: " << e.what() << "\n";
        return bound_exceeded;
    } catch (const std::exception& e) {
        // Malformed or inconsistent inputs of every kind.
        err << "error: " << e.what() << "\n";
        return validation;
    }
    return ok;
}

}  // namespace protofsm::cli

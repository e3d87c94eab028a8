#include "doctest.h"
#include "fixtures.hpp"
#include "protofsm/ir.hpp"

using namespace protofsm::ir;

namespace {

const Node* only_control(const Document& doc) {
    const Node* found = nullptr;
    int n = 0;
    for (const auto& b : doc.blocks)
        if (b.kind == NodeKind::control) {
            found = &b;
            ++n;
        }
    return n == 1 ? found : nullptr;
}

IrError::Code error_code(const std::string& text) {
    try {
        parse_ir(text);
    } catch (const IrError& e) {
        return e.code();
    }
    FAIL("expected IrError");
    return IrError::Code::malformed;
}

}  // namespace

TEST_CASE("fig5 control block keeps its six children in order") {
    auto doc = load_ir(data_path("ir/fig5_tcp.xml"));
    const Node* ctl = only_control(doc);
    REQUIRE(ctl);
    auto kids = ctl->elements();
    REQUIRE(kids.size() == 6);
    CHECK(kids[0]->kind == NodeKind::trigger);
    CHECK(kids[1]->kind == NodeKind::action);
    CHECK(*kids[1]->attr("type") == "issue");
    CHECK(kids[2]->kind == NodeKind::variable);
    CHECK(kids[3]->kind == NodeKind::action);
    CHECK(*kids[3]->attr("type") == "send");
    CHECK(kids[4]->kind == NodeKind::variable);
    CHECK(kids[5]->kind == NodeKind::transition);
    CHECK(ctl->relevant());
    CHECK(validate_ir(doc).empty());
}

TEST_CASE("plain text offsets cover the unmarked text") {
    auto doc = parse_ir("a <transition>enter <ref_state id=\"0\">X</ref_state></transition> b <def_state id=\"0\">X</def_state>");
    CHECK(doc.plain_text == "a enter X b X");
    const Node& tr = doc.blocks[1];
    CHECK(doc.span(tr) == "enter X");
    CHECK(doc.span(tr.children[1]) == "X");
    CHECK(tr.children[1].begin == 8);
}

TEST_CASE("entities decode into plain text and re-escape on output") {
    std::string text = "<action type=\"send\">form &lt;SEQ=ISS> &amp; go</action>";
    auto doc = parse_ir(text);
    CHECK(doc.plain_text == "form <SEQ=ISS> & go");
    CHECK(serialize_ir(doc) == text);
}

TEST_CASE("empty document") {
    auto doc = parse_ir("");
    CHECK(doc.blocks.empty());
    CHECK(doc.def_states.empty());
    CHECK(doc.def_events.empty());
    CHECK(doc.def_vars.empty());
    CHECK(def_dictionary(doc).empty());
}

TEST_CASE("dangling state reference") {
    std::string t = "<transition><arg_target><ref_state id=\"2\">SYN-SENT</ref_state></arg_target></transition>";
    CHECK(error_code(t) == IrError::Code::unresolved_reference);
    try {
        parse_ir(t);
    } catch (const IrError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
        CHECK(e.line() == 1);
    }
}

TEST_CASE("parse errors name their category") {
    CHECK(error_code("<bogus>x</bogus>") == IrError::Code::unknown_tag);
    CHECK(error_code("<trigger>if x</trigger>") == IrError::Code::illegal_nesting);
    CHECK(error_code("<control><action>send</action></control>") == IrError::Code::missing_attribute);
    CHECK(error_code("<control><trigger>x</control>") == IrError::Code::malformed);
    CHECK(error_code("<action type=\"send\"><arg_source>x</arg_source></action>") == IrError::Code::illegal_nesting);
    CHECK(error_code("<def_state>X</def_state>") == IrError::Code::missing_attribute);
}

TEST_CASE("validate_ir reports violations as data") {
    Document doc;
    Node trig;
    trig.kind = NodeKind::trigger;
    trig.tag = "trigger";
    doc.blocks.push_back(trig);
    auto v = validate_ir(doc);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule == "IllegalNesting");
    CHECK(v[0].path == "/trigger[0]");
}

TEST_CASE("duplicate state id") {
    Document doc;
    for (int i = 0; i < 2; ++i) {
        Node d;
        d.kind = NodeKind::def_state;
        d.tag = "def_state";
        d.attrs = {{"id", "3"}};
        doc.blocks.push_back(d);
        doc.def_states.push_back({3, i ? "B" : "A", 0, 0});
    }
    auto v = validate_ir(doc);
    REQUIRE(!v.empty());
    CHECK(v[0].rule == "DuplicateId");
    CHECK(error_code("<def_state id=\"3\">A</def_state><def_state id=\"3\">B</def_state>") == IrError::Code::duplicate_id);
}

TEST_CASE("arg_inter and arg_intermediate both parse") {
    std::string defs = "<def_state id=\"0\">OPEN</def_state><def_state id=\"1\">CLOSEREQ</def_state><def_state id=\"2\">CLOSED</def_state>";
    auto a = parse_ir(defs + "<transition>via <arg_inter><ref_state id=\"1\">CLOSEREQ</ref_state></arg_inter></transition>");
    auto b = parse_ir(defs + "<transition>via <arg_intermediate><ref_state id=\"1\">CLOSEREQ</ref_state></arg_intermediate></transition>");
    CHECK(a.blocks[3].children[1].kind == NodeKind::arg_inter);
    CHECK(b.blocks[3].children[1].kind == NodeKind::arg_inter);
    CHECK(serialize_ir(b).find("arg_intermediate") != std::string::npos);
}

TEST_CASE("relevant defaults to true") {
    auto doc = parse_ir("<control>x</control><control relevant=\"false\">y</control>");
    CHECK(doc.blocks[0].relevant());
    CHECK_FALSE(doc.blocks[1].relevant());
}

TEST_CASE("ref_event type falls back to the enclosing action") {
    auto doc = load_ir(data_path("ir/fig5_tcp.xml"));
    auto d = def_dictionary(doc);
    const auto* syn = d.lookup("syn");
    REQUIRE(syn);
    CHECK(syn->id == 10);
    CHECK(syn->kind == EntryKind::event);
    REQUIRE(syn->direction);
    CHECK(*syn->direction == EventType::send);
    const auto* ss = d.lookup("SYN-SENT");
    REQUIRE(ss);
    CHECK(ss->id == 2);
    CHECK(d.lookup("syn_sent") == ss);
}

TEST_CASE("dictionary lookup normalizes case") {
    auto doc = parse_ir("<def_event id=\"4\">ACK</def_event> and <def_event id=\"10\">SYN</def_event>");
    auto d = def_dictionary(doc);
    REQUIRE(d.lookup("ack"));
    CHECK(d.lookup("ack")->id == 4);
    CHECK(d.lookup(" Syn. ")->id == 10);
    CHECK(d.lookup("fin") == nullptr);
}

TEST_CASE("normalize_name") {
    CHECK(normalize_name("SYN-SENT") == "SYN_SENT");
    CHECK(normalize_name("  time-wait  state, ") == "TIME_WAIT STATE");
    CHECK(normalize_name("syn_sent") == "SYN_SENT");
    CHECK(normalize_name("...") == "");
}

TEST_CASE("serialization round trip on the fig5 fixture") {
    auto text = read_file(data_path("ir/fig5_tcp.xml"));
    auto doc = parse_ir(text);
    auto once = serialize_ir(doc);
    CHECK(once == text);
    CHECK(serialize_ir(parse_ir(once)) == once);
}

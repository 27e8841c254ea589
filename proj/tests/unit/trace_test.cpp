#include <doctest.h>

#include <sstream>
#include <string>

#include "faultcast/error.hpp"
#include "faultcast/interp.hpp"
#include "faultcast/trace.hpp"
#include "oracles.hpp"

using namespace faultcast;
using namespace faultcast::trace;
using testsupport::Op;
using testsupport::make_rec;

namespace {

Trace golden(const char* prog, const char* in) {
  TraceBuilder b;
  fi::execute(ir::parse_program(testsupport::read_fixture(prog)),
              fi::parse_bindings(testsupport::read_fixture(in)), {}, {&b});
  return b.take();
}

}  // namespace

TEST_SUITE("trace") {

TEST_CASE("serialize then parse reproduces the trace exactly") {
  for (auto [p, i] : {std::pair{"arraysum.ir", "arraysum.in"}, {"euclid.ir", "euclid.in"}}) {
    Trace t = golden(p, i);
    Trace back = parse_trace_text(serialize_trace(t));
    CHECK(back == t);
    // and the text itself is a fixed point
    CHECK(serialize_trace(back) == serialize_trace(t));
  }
}

TEST_CASE("record line format is byte-stable") {
  auto rec = make_rec(ir::Opcode::Add, 7,
                      {Op{"%i", 32, 1}, Op{"#1", 32, 1}, Op{"%i", 32, 2, Role::Output}});
  CHECK(format_record_line(rec) ==
        "7\tadd\tin:%i:i32:32:00000001\tin:#1:i32:32:00000001\tout:%i:i32:32:00000002");

  auto shifted = make_rec(ir::Opcode::Lshr, 9,
                          {Op{"%v", 32, 0x80}, Op{"#4", 32, 4}, Op{"%w", 32, 8, Role::Output}},
                          Aux{.shamt = 4});
  CHECK(format_record_line(shifted) ==
        "9\tlshr\tin:%v:i32:32:00000080\tin:#4:i32:32:00000004\tout:%w:i32:32:00000008"
        "\taux=shamt=4");
}

TEST_CASE("reader streams chunks one at a time") {
  Trace t = golden("arraysum.ir", "arraysum.in");
  std::istringstream in(serialize_trace(t));
  TraceReader reader(in);
  REQUIRE(reader.outputs().size() == 1);
  CHECK(reader.outputs()[0] == "out");
  size_t n = 0;
  while (auto chunk = reader.next_chunk()) {
    CHECK(*chunk == t.chunks[n]);
    ++n;
  }
  CHECK(n == t.chunks.size());
}

TEST_CASE("trace parse errors carry line numbers") {
  CHECK_THROWS_AS(parse_trace_text(""), ParseError);
  CHECK_THROWS_AS(parse_trace_text("#OUTPUTS out\n"), DataError);  // no records
  CHECK_THROWS_AS(parse_trace_text("#CHUNK 0\n0\tadd\n"), ParseError);  // missing header

  try {
    parse_trace_text("#OUTPUTS out\n#CHUNK 0\nnot_a_seq\tadd\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_trace_text("#OUTPUTS out\n#CHUNK 0\n0\tadd\tin:%a:i32\n"), ParseError);
  CHECK_THROWS_AS(parse_trace_text("#OUTPUTS out\n#CHUNK 0\n0\tnope\n"), ParseError);
}

TEST_CASE("records outside any chunk are rejected") {
  CHECK_THROWS_AS(parse_trace_text("#OUTPUTS out\n0\tadd\tout:%a:i32:32:00000000\n"),
                  ParseError);
}

TEST_CASE("split_chunks merges empty spans and renumbers") {
  std::vector<InstructionRecord> records;
  for (uint64_t i = 0; i < 10; ++i)
    records.push_back(make_rec(ir::Opcode::Add, i, {Op{"%a", 32, i}}));

  auto chunks = split_chunks(records, {0, 3, 3, 7, 10});
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0].id == 0);
  CHECK(chunks[1].id == 1);
  CHECK(chunks[2].id == 2);
  CHECK(chunks[0].records.size() == 3);
  CHECK(chunks[1].records.size() == 4);
  CHECK(chunks[2].records.size() == 3);
  CHECK(chunks[2].records.front().seq == 7);

  auto whole = split_chunks(records, {});
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].records.size() == 10);
}

TEST_CASE("builder and writer observe the same sink events") {
  Trace t = golden("euclid.ir", "euclid.in");
  std::ostringstream text;
  TraceTextWriter writer(text);
  TraceBuilder builder;
  fi::execute(ir::parse_program(testsupport::read_fixture("euclid.ir")),
              fi::parse_bindings(testsupport::read_fixture("euclid.in")), {},
              {&writer, &builder});
  CHECK(builder.trace() == t);
  CHECK(text.str() == serialize_trace(t));
}

}  // TEST_SUITE

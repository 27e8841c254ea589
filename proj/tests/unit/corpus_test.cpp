#include <doctest.h>

#include <set>
#include <string>

#include "faultcast/corpus.hpp"
#include "faultcast/error.hpp"
#include "faultcast/interp.hpp"
#include "faultcast/ir.hpp"
#include "faultcast/pipeline.hpp"

using namespace faultcast;

TEST_SUITE("corpus") {

TEST_CASE("generation is a pure function of seed and index") {
  auto a = corpus::generate_kernel(12345, 7);
  auto b = corpus::generate_kernel(12345, 7);
  CHECK(a.id == b.id);
  CHECK(a.program == b.program);
  CHECK(a.inputs == b.inputs);

  auto c = corpus::generate_kernel(12346, 7);
  CHECK(a.program != c.program);
}

TEST_CASE("families rotate with the index and name the ids") {
  auto kernels = corpus::generate_corpus(1, 12);
  REQUIRE(kernels.size() == 12);
  std::set<std::string> ids;
  for (size_t i = 0; i < kernels.size(); ++i) {
    std::string family = corpus::family_name(static_cast<int>(i % corpus::kFamilyCount));
    CHECK(kernels[i].id.substr(0, family.size()) == family);
    ids.insert(kernels[i].id);
  }
  CHECK(ids.size() == 12);  // ids are distinct

  CHECK_THROWS_AS(corpus::family_name(-1), UsageError);
  CHECK_THROWS_AS(corpus::family_name(corpus::kFamilyCount), UsageError);
}

TEST_CASE("first_index offsets the corpus window") {
  auto window = corpus::generate_corpus(9, 3, 5);
  REQUIRE(window.size() == 3);
  for (uint64_t i = 0; i < 3; ++i) {
    auto direct = corpus::generate_kernel(9, 5 + i);
    CHECK(window[i].id == direct.id);
    CHECK(window[i].program == direct.program);
  }
}

TEST_CASE("every generated kernel parses, validates, and halts") {
  // four full family rotations
  auto kernels = corpus::generate_corpus(2, 24);
  for (const auto& k : kernels) {
    CAPTURE(k.id);
    ir::Program p = ir::parse_program(k.program);
    auto v = ir::validate_program(p);
    CHECK(v.ok());
    fi::InputBindings in = fi::parse_bindings(k.inputs);
    fi::ExecutionOutcome out = fi::execute(p, in, {}, {});
    CHECK(out.completed());
    CHECK_FALSE(out.outputs.empty());
  }
}

TEST_CASE("manifest text parses back with resolved paths and knobs") {
  auto kernels = corpus::generate_corpus(4, 3);
  std::string text = corpus::corpus_manifest(kernels, 500, 1e-5, 4);
  pipeline::Manifest m = pipeline::parse_manifest(text, "/work/corpus");
  REQUIRE(m.entries.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    const auto& e = m.entries[i];
    CHECK(e.id == kernels[i].id);
    CHECK(e.program_path == "/work/corpus/programs/" + kernels[i].id + ".ir");
    CHECK(e.inputs_path == "/work/corpus/inputs/" + kernels[i].id + ".in");
    CHECK(e.n == 500);
    CHECK(e.tolerance == 1e-5);
    CHECK(e.seed.has_value());
  }
  // per-entry seeds differ pairwise
  CHECK(m.entries[0].seed != m.entries[1].seed);
  CHECK(m.entries[1].seed != m.entries[2].seed);
}

}  // TEST_SUITE

#include <doctest.h>

#include <array>
#include <string>

#include "faultcast/dataset.hpp"
#include "faultcast/error.hpp"

using namespace faultcast;
using learn::Dataset;
using learn::Matrix;

namespace {

Dataset sample() {
  Dataset d;
  d.ids = {"k0", "k1", "k2"};
  d.x = Matrix(3, 2);
  d.x.at(0, 0) = 0.5;
  d.x.at(0, 1) = 1.0 / 3.0;
  d.x.at(1, 0) = 1e-6;
  d.x.at(1, 1) = 0.0;
  d.x.at(2, 0) = 0.925;
  d.x.at(2, 1) = 12.25;
  d.success = {0.701, 0.653, 1.0};
  d.interruption = {0.1, 0.2, 0.0};
  return d;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("csv serialization is frozen") {
  std::string csv = learn::serialize_dataset_csv(sample());
  CHECK(csv ==
        "id,f0,f1,success,interruption\n"
        "k0,0.5,0.333333333,0.701,0.1\n"
        "k1,1e-06,0,0.653,0.2\n"
        "k2,0.925,12.25,1,0\n");
}

TEST_CASE("csv roundtrip preserves 9 significant digits") {
  Dataset d = sample();
  Dataset back = learn::parse_dataset_csv(learn::serialize_dataset_csv(d));
  REQUIRE(back.size() == 3);
  CHECK(back.ids == d.ids);
  CHECK(back.x.rows == 3);
  CHECK(back.x.cols == 2);
  CHECK(back.x.at(0, 0) == 0.5);
  CHECK(back.x.at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(back.x.at(1, 0) == 1e-6);
  CHECK(back.success == d.success);
  CHECK(back.interruption == d.interruption);

  // a second pass over serialized values is a fixed point
  CHECK(learn::serialize_dataset_csv(back) == learn::serialize_dataset_csv(d));
}

TEST_CASE("csv parse rejects malformed input with line positions") {
  CHECK_THROWS_AS(learn::parse_dataset_csv(""), ParseError);
  CHECK_THROWS_AS(learn::parse_dataset_csv("id,success,interruption\n"), ParseError);
  CHECK_THROWS_AS(learn::parse_dataset_csv("bogus,header\nk0,1\n"), ParseError);

  // row with the wrong field count names its line
  try {
    learn::parse_dataset_csv("id,f0,success,interruption\nk0,0.5,0.7\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  // non-numeric feature
  CHECK_THROWS_AS(
      learn::parse_dataset_csv("id,f0,success,interruption\nk0,oops,0.7,0.1\n"),
      ParseError);
}

TEST_CASE("gather_rows selects and reorders") {
  Matrix m(4, 2);
  for (size_t r = 0; r < 4; ++r)
    for (size_t c = 0; c < 2; ++c) m.at(r, c) = static_cast<double>(10 * r + c);

  std::array<uint32_t, 3> idx{3, 0, 3};
  Matrix g = m.gather_rows(idx);
  REQUIRE(g.rows == 3);
  REQUIRE(g.cols == 2);
  CHECK(g.at(0, 0) == 30.0);
  CHECK(g.at(1, 1) == 1.0);
  CHECK(g.at(2, 0) == 30.0);
}

TEST_CASE("gather_cols selects and reorders") {
  Matrix m(2, 3);
  for (size_t r = 0; r < 2; ++r)
    for (size_t c = 0; c < 3; ++c) m.at(r, c) = static_cast<double>(10 * r + c);

  std::array<int, 2> idx{2, 1};
  Matrix g = m.gather_cols(idx);
  REQUIRE(g.rows == 2);
  REQUIRE(g.cols == 2);
  CHECK(g.at(0, 0) == 2.0);
  CHECK(g.at(0, 1) == 1.0);
  CHECK(g.at(1, 0) == 12.0);
}

TEST_CASE("target helpers map names to columns") {
  Dataset d = sample();
  CHECK(&learn::target_of(d, learn::Target::Success) == &d.success);
  CHECK(&learn::target_of(d, learn::Target::Interruption) == &d.interruption);
  CHECK(std::string(learn::target_name(learn::Target::Success)) == "success");
  CHECK(std::string(learn::target_name(learn::Target::Interruption)) == "interruption");
}

}  // TEST_SUITE

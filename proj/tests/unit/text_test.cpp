#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "faultcast/text.hpp"

using namespace faultcast;
namespace fs = std::filesystem;

TEST_SUITE("text") {

TEST_CASE("trim strips spaces and tabs on both sides") {
  CHECK(trim("  a b \t") == "a b");
  CHECK(trim("a") == "a");
  CHECK(trim("   ") == "");
  CHECK(trim("") == "");
}

TEST_CASE("split keeps empty fields") {
  auto parts = split("a,b,,c", ',');
  REQUIRE(parts.size() == 4);
  CHECK(parts[0] == "a");
  CHECK(parts[2] == "");
  CHECK(parts[3] == "c");
  CHECK(split("", ',').size() == 1);
}

TEST_CASE("split_ws collapses runs and drops empties") {
  auto parts = split_ws("  a \t  b  c ");
  REQUIRE(parts.size() == 3);
  CHECK(parts[0] == "a");
  CHECK(parts[1] == "b");
  CHECK(parts[2] == "c");
  CHECK(split_ws("   ").empty());
}

TEST_CASE("starts_with") {
  CHECK(starts_with("entry:", "entry"));
  CHECK_FALSE(starts_with("en", "entry"));
}

TEST_CASE("fmt_g9 is deterministic shortest-9-digit form") {
  CHECK(fmt_g9(0.5) == "0.5");
  CHECK(fmt_g9(1.0 / 3.0) == "0.333333333");
  CHECK(fmt_g9(1e-6) == "1e-06");
  CHECK(fmt_g9(0.0) == "0");
  CHECK(fmt_g9(3.0) == "3");
}

TEST_CASE("fmt_f64_literal round-trips and stays a float literal") {
  for (double v : {0.1, 1.0 / 3.0, -2.5, 1e300, 5.0, 0.0, 1e-12}) {
    std::string s = fmt_f64_literal(v);
    CHECK((s.find('.') != std::string::npos || s.find('e') != std::string::npos ||
           s.find('E') != std::string::npos));
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("hex renders fixed width lowercase") {
  CHECK(hex32(0) == "00000000");
  CHECK(hex32(255) == "000000ff");
  CHECK(hex32(0xdeadbeef) == "deadbeef");
  CHECK(hex64(0xdeadbeefull) == "00000000deadbeef");
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  // chaining: hashing "ab" equals hashing "b" seeded with the hash of "a"
  CHECK(fnv1a64("ab") == fnv1a64("b", fnv1a64("a")));
}

TEST_CASE("write_file_atomic then read_file round-trips") {
  fs::path dir = fs::temp_directory_path() / "faultcast_text_test";
  fs::create_directories(dir);
  fs::path f = dir / "blob.txt";
  write_file_atomic(f, "first\n");
  CHECK(read_file(f) == "first\n");
  write_file_atomic(f, "second\n");
  CHECK(read_file(f) == "second\n");
  // no stray temp files left behind
  size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  fs::remove_all(dir);
}

TEST_CASE("read_file on a missing path throws") {
  CHECK_THROWS(read_file(fs::temp_directory_path() / "faultcast_absent" / "nope.txt"));
}

}  // TEST_SUITE

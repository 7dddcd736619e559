#include <catch2/catch_amalgamated.hpp>

#include "hybridcontract/toml_lite.hpp"

using namespace hybridcontract;
using Catch::Approx;

TEST_CASE("scalar values and sections", "[toml]") {
  const TomlTable t = TomlTable::parse(
      "model = \"traffic\"\n"
      "t_end = 6.5          # hours\n"
      "seed = 42\n"
      "fancy = true\n"
      "\n"
      "[integrator]\n"
      "rel_tol = 1e-8\n"
      "max_events = 100\n");
  CHECK(t.get_string("model", "") == "traffic");
  CHECK(t.get_double("t_end", 0.0) == Approx(6.5));
  CHECK(t.get_integer("seed", 0) == 42);
  CHECK(t.get_bool("fancy", false));
  CHECK(t.get_double("integrator.rel_tol", 0.0) == Approx(1e-8));
  CHECK(t.get_integer("integrator.max_events", 0) == 100);
  CHECK(t.get_string("missing", "fallback") == "fallback");
  CHECK(t.unconsumed().empty());
}

TEST_CASE("arrays", "[toml]") {
  const TomlTable t = TomlTable::parse("x0 = [2.0, 1.0, -3]\nempty = []\n");
  const std::vector<double> x = t.get_number_array("x0", {});
  REQUIRE(x.size() == 3);
  CHECK(x[0] == 2.0);
  CHECK(x[2] == -3.0);
  CHECK(t.get_number_array("empty", {1.0}).empty());
}

TEST_CASE("unconsumed keys are reported", "[toml]") {
  const TomlTable t = TomlTable::parse("a = 1\nb = 2\n[sec]\nc = 3\n");
  (void)t.get_integer("a", 0);
  const auto left = t.unconsumed();
  REQUIRE(left.size() == 2);
  CHECK(left[0] == "b");
  CHECK(left[1] == "sec.c");
}

TEST_CASE("keys_in lists a section without consuming", "[toml]") {
  const TomlTable t = TomlTable::parse("[model_params]\na_L = 1\nb_L = 2\n");
  const auto keys = t.keys_in("model_params");
  REQUIRE(keys.size() == 2);
  CHECK(keys[0] == "a_L");
  CHECK(t.unconsumed().size() == 2);
}

TEST_CASE("parse errors", "[toml]") {
  CHECK_THROWS_AS(TomlTable::parse("novalue\n"), InvalidArgument);
  CHECK_THROWS_AS(TomlTable::parse("[unterminated\n"), InvalidArgument);
  CHECK_THROWS_AS(TomlTable::parse("a = \"open\n"), InvalidArgument);
  CHECK_THROWS_AS(TomlTable::parse("a = [1, 2\n"), InvalidArgument);
  CHECK_THROWS_AS(TomlTable::parse("a = nonsense\n"), InvalidArgument);
  CHECK_THROWS_AS(TomlTable::parse("a = 1\na = 2\n"), InvalidArgument);
  CHECK_THROWS_AS(TomlTable::parse("bad key = 1\n"), InvalidArgument);
}

TEST_CASE("type mismatches throw", "[toml]") {
  const TomlTable t = TomlTable::parse("s = \"x\"\nf = 1.5\n");
  CHECK_THROWS_AS(t.get_double("s", 0.0), InvalidArgument);
  CHECK_THROWS_AS(t.get_integer("f", 0), InvalidArgument);
  CHECK_THROWS_AS(t.get_bool("f", false), InvalidArgument);
  CHECK_THROWS_AS(t.get_number_array("f", {}), InvalidArgument);
}

TEST_CASE("comments inside strings are kept", "[toml]") {
  const TomlTable t = TomlTable::parse("s = \"a # b\"  # real comment\n");
  CHECK(t.get_string("s", "") == "a # b");
}

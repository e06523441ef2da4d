#include <doctest.h>

#include "caplab/config.hpp"

using namespace caplab;

TEST_CASE("config parses key-value lines with comments") {
  const auto cfg = Config::parse_string(
      "# header comment\n"
      "domain.kind = half-space\n"
      "domain.grid_n = 64   # trailing comment\n"
      "profile.x_o = 0.5 -0.25 0\n"
      "solver.tol = 1e-8\n"
      "flag = true\n",
      "test.cfg");
  CHECK(cfg.get_string("domain.kind") == "half-space");
  CHECK(cfg.get_int("domain.grid_n") == 64);
  CHECK(cfg.get_double("solver.tol") == doctest::Approx(1e-8));
  CHECK(cfg.get_bool("flag"));
  const auto v = cfg.get_doubles("profile.x_o");
  REQUIRE(v.size() == 3);
  CHECK(v[1] == doctest::Approx(-0.25));
  CHECK(cfg.get_double("missing.key", 7.5) == 7.5);
  cfg.check_consumed();
}

TEST_CASE("config diagnostics name the field and line") {
  const auto cfg = Config::parse_string("a = 1\nb = oops\n", "bad.cfg");
  CHECK_THROWS_WITH_AS(cfg.get_double("b"),
                       doctest::Contains("field `b`"), ConfigError);
  CHECK_THROWS_WITH_AS(cfg.get_double("c"),
                       doctest::Contains("missing required field `c`"), ConfigError);
  try {
    cfg.get_double("b");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bad.cfg:2") != std::string::npos);
  }
}

TEST_CASE("config rejects malformed lines and duplicates") {
  CHECK_THROWS_AS(Config::parse_string("novalue\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("k = 1\nk = 2\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("= 3\n"), ConfigError);
}

TEST_CASE("unconsumed keys are reported as unknown fields") {
  const auto cfg = Config::parse_string("known = 1\ntypo_key = 2\n", "t.cfg");
  CHECK(cfg.get_int("known") == 1);
  CHECK_THROWS_WITH_AS(cfg.check_consumed(), doctest::Contains("typo_key"),
                       ConfigError);
}

TEST_CASE("overrides replace values") {
  auto cfg = Config::parse_string("a = 1\n");
  cfg.override_value("a", "2");
  cfg.override_value("b.c", "3.5");
  CHECK(cfg.get_int("a") == 2);
  CHECK(cfg.get_double("b.c") == doctest::Approx(3.5));
}

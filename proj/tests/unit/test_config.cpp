#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "adaband/config.hpp"

using namespace adaband;

namespace {

std::string message_of(const std::string& text) {
  try {
    Config::parse_string(text, "test.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("sections, comments and types parse") {
  Config cfg = Config::parse_string(
      "# leading comment\n"
      "[experiment]\n"
      "n = 4096        ; trailing comment\n"
      "alpha = 0.05\n"
      "flag = true\n"
      "name = two_class\n"
      "ns = 1, 2,3\n"
      "xs = 0.5,1.0\n"
      "big = 18446744073709551615\n"
      "\n"
      "[model]\n"
      "kind = uniform\n"
      "[model]\n"
      "kind = bump\n",
      "test.ini");
  const Config::Section& ex = cfg.require("experiment");
  CHECK(ex.get_int("n") == 4096);
  CHECK(ex.get_double("alpha") == 0.05);
  CHECK(ex.get_bool("flag", false));
  CHECK(ex.get_string("name") == "two_class");
  CHECK(ex.get_int_list("ns") == std::vector<long long>{1, 2, 3});
  CHECK(ex.get_double_list("xs") == std::vector<double>{0.5, 1.0});
  CHECK(ex.get_u64("big") == 18446744073709551615ull);
  CHECK(ex.has("n"));
  CHECK_FALSE(ex.has("missing"));
  // fallbacks only apply to absent keys
  CHECK(ex.get_int("n", 7) == 4096);
  CHECK(ex.get_int("absent", 7) == 7);
  CHECK(ex.get_double("absent", 2.5) == 2.5);
  CHECK(ex.get_string("absent", "x") == "x");
  CHECK(ex.get_bool("absent", true));
  // repeated sections are kept in order
  REQUIRE(cfg.all("model").size() == 2);
  CHECK(cfg.all("model")[0]->get_string("kind") == "uniform");
  CHECK(cfg.all("model")[1]->get_string("kind") == "bump");
  CHECK(cfg.find("nope") == nullptr);
  CHECK_THROWS_AS(cfg.require("nope"), ConfigError);
}

TEST_CASE("parse errors carry the file and line") {
  CHECK(message_of("[experiment\nn = 1\n").find("test.ini:1") != std::string::npos);
  CHECK(message_of("n = 1\n").find("key outside of any [section]") != std::string::npos);
  CHECK(message_of("[]\n").find("empty section name") != std::string::npos);
  CHECK(message_of("[a]\nn = 1\nn = 2\n").find("duplicate key 'n'") != std::string::npos);
  CHECK(message_of("[a]\nn = 1\nn = 2\n").find(":3") != std::string::npos);
  CHECK(message_of("[a]\njust words\n").find("expected 'key = value'") != std::string::npos);
  CHECK(message_of("[a]\n= 5\n").find("empty key") != std::string::npos);
}

TEST_CASE("typed getters reject malformed values with their location") {
  Config cfg = Config::parse_string(
      "[a]\n"
      "i = x\n"
      "d = 1.2.3\n"
      "b = maybe\n"
      "li = 1,two\n"
      "ld = 0.5,oops\n"
      "neg = -4\n",
      "test.ini");
  const Config::Section& a = cfg.require("a");
  CHECK_THROWS_AS(a.get_int("i"), ConfigError);
  CHECK_THROWS_AS(a.get_double("d"), ConfigError);
  CHECK_THROWS_AS(a.get_bool("b", false), ConfigError);
  CHECK_THROWS_AS(a.get_int_list("li"), ConfigError);
  CHECK_THROWS_AS(a.get_double_list("ld"), ConfigError);
  CHECK_THROWS_AS(a.get_u64("neg"), ConfigError);
  CHECK(a.get_int("neg") == -4);
  try {
    a.get_int("i");
  } catch (const ConfigError& e) {
    std::string what = e.what();
    CHECK(what.find("test.ini:2") != std::string::npos);
    CHECK(what.find("'i'") != std::string::npos);
  }
  CHECK_THROWS_AS(a.get_string("missing"), ConfigError);
}

TEST_CASE("unused keys are reported as unknown") {
  Config cfg = Config::parse_string(
      "[experiment]\n"
      "n = 4096\n"
      "typo_key = 1\n",
      "test.ini");
  const Config::Section& ex = cfg.require("experiment");
  (void)ex.get_int("n");
  try {
    cfg.check_all_used();
    FAIL("expected unknown-key error");
  } catch (const ConfigError& e) {
    std::string what = e.what();
    CHECK(what.find("typo_key") != std::string::npos);
    CHECK(what.find("test.ini:3") != std::string::npos);
  }
  (void)ex.get_int("typo_key");
  CHECK_NOTHROW(cfg.check_all_used());
}

TEST_CASE("missing config files are reported by path") {
  try {
    Config::parse_file("/nonexistent/path/run.ini");
    FAIL("expected open error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/path/run.ini") != std::string::npos);
  }
}

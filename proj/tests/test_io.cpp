#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

#include "mssk/config.hpp"
#include "mssk/io.hpp"

using mssk::cfg::Config;
using mssk::cfg::config_error;
using namespace mssk::io;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("mssk-test-" + std::to_string(std::rand()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("config parses key = value lines, comments, and blanks") {
  Config c = Config::parse(
      "# header comment\n"
      "model.r = 2\n"
      "\n"
      "  model.zeta =  0.3, 0.7 \n"
      "model.gamma=0.5,1.0\n"
      "run.label = smoke test\n");
  CHECK(c.get_int("model.r") == 2);
  CHECK(c.get_double_list("model.zeta") == std::vector<double>{0.3, 0.7});
  CHECK(c.get_double_list("model.gamma") == std::vector<double>{0.5, 1.0});
  CHECK(c.get_raw("run.label") == "smoke test");
  CHECK(c.has("model.r"));
  CHECK_FALSE(c.has("model.missing"));
}

TEST_CASE("config parse errors carry line context") {
  CHECK_THROWS_AS(Config::parse("just a line without equals\n"), config_error);
  CHECK_THROWS_AS(Config::parse("= value\n"), config_error);
  CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), config_error);

  try {
    Config::parse("ok = 1\nbroken line\n");
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("config typed getters validate and fall back") {
  Config c = Config::parse("n = 12\nx = 1.5\nname = abc\nneg = -3\n");
  CHECK(c.get_i64("n") == 12);
  CHECK(c.get_int("n", 99) == 12);
  CHECK(c.get_int("absent", 99) == 99);
  CHECK(c.get_double("x") == 1.5);
  CHECK(c.get_double("absent", 2.5) == 2.5);
  CHECK(c.get_u64("n", 7) == 12);
  CHECK(c.get_u64("absent", 7) == 7);
  CHECK(c.get_string("name", "zz") == "abc");
  CHECK(c.get_string("absent", "zz") == "zz");

  CHECK_THROWS_AS(c.get_double("name"), config_error);
  CHECK_THROWS_AS(c.get_i64("x"), config_error);
  CHECK_THROWS_AS(c.get_i64("name"), config_error);
  CHECK_THROWS_AS(c.get_u64("neg", 0), config_error);
  CHECK_THROWS_AS(c.get_raw("absent"), config_error);

  Config lists = Config::parse("a = 1, 2,3\nb = 0.5\nbad = 1, x\n");
  CHECK(lists.get_int_list("a") == std::vector<int>{1, 2, 3});
  CHECK(lists.get_double_list("b") == std::vector<double>{0.5});
  CHECK_THROWS_AS(lists.get_double_list("bad"), config_error);
}

TEST_CASE("config hash depends on content, not formatting or key order") {
  Config a = Config::parse("x = 1\ny = 2\n");
  Config b = Config::parse("# comment\ny=2\n\nx   =   1\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash_hex() == b.hash_hex());
  CHECK(a.hash_hex().size() == 16);

  Config c = Config::parse("x = 1\ny = 3\n");
  CHECK(a.hash() != c.hash());

  // canonical form round-trips
  Config again = Config::parse(a.canonical());
  CHECK(again.canonical() == a.canonical());

  // set() participates in the hash
  Config d = a;
  d.set("z", "5");
  CHECK(d.hash() != a.hash());
  CHECK(d.get_int("z") == 5);
}

TEST_CASE("model_params reads and validates the model block") {
  Config c = Config::parse(
      "model.r = 2\nmodel.zeta = 0.3, 0.7\nmodel.gamma = 0.5, 1.0\n");
  auto p = mssk::cfg::model_params(c);
  CHECK(p.r == 2);
  CHECK(p.zeta == std::vector<double>{0.3, 0.7});
  CHECK(p.gamma == std::vector<double>{0.5, 1.0});

  Config bad = Config::parse(
      "model.r = 2\nmodel.zeta = 0.7, 0.3\nmodel.gamma = 0.5, 1.0\n");
  CHECK_THROWS_AS(mssk::cfg::model_params(bad), config_error);

  Config missing = Config::parse("model.r = 2\n");
  CHECK_THROWS_AS(mssk::cfg::model_params(missing), config_error);
}

TEST_CASE("csv_table emits a header and checks row widths") {
  std::string csv = csv_table({"a", "b"}, {{"1", "2"}, {"x", "y"}});
  CHECK(csv == "a,b\n1,2\nx,y\n");
  CHECK_THROWS_AS(csv_table({"a", "b"}, {{"1"}}), io_error);
}

TEST_CASE("json writer escapes strings and formats numbers round-trip") {
  JsonWriter w;
  w.field("name", std::string_view("a\"b\\c\nd\te"))
      .field("count", int64_t{42})
      .field("flag", true)
      .field("x", 0.1)
      .field_array("xs", {1.0, 0.5});
  std::string out = w.finish();
  CHECK(out.front() == '{');
  CHECK(out.substr(out.size() - 2) == "}\n");
  CHECK(out.find("\"name\": \"a\\\"b\\\\c\\nd\\te\"") != std::string::npos);
  CHECK(out.find("\"count\": 42") != std::string::npos);
  CHECK(out.find("\"flag\": true") != std::string::npos);
  CHECK(out.find("\"x\": 0.1") != std::string::npos);
  CHECK(out.find("\"xs\": [1,0.5]") != std::string::npos);

  // control characters become \u escapes
  CHECK(JsonWriter::quote(std::string_view("\x01", 1)) == "\"\\u0001\"");
}

TEST_CASE("write_once creates, tolerates identical rewrites, rejects drift") {
  TempDir tmp;
  std::string path = tmp.file("artifact/run.csv");

  write_once(path, "a,b\n1,2\n");
  CHECK(read_file(path) == "a,b\n1,2\n");

  REQUIRE_NOTHROW(write_once(path, "a,b\n1,2\n"));
  CHECK(read_file(path) == "a,b\n1,2\n");

  CHECK_THROWS_AS(write_once(path, "a,b\n9,9\n"), io_error);
  CHECK(read_file(path) == "a,b\n1,2\n");

  CHECK_THROWS_AS(read_file(tmp.file("nope.txt")), io_error);
}

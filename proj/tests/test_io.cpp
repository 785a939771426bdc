#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "slam/io.hpp"

using namespace slam;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = (std::filesystem::temp_directory_path() / name).string();
  }
  ~TempFile() { std::remove(path.c_str()); }
  void write(const std::string& text) const {
    std::ofstream out(path, std::ios::binary);
    out << text;
  }
};

}  // namespace

TEST_CASE("binary csv round trip") {
  TempFile f("slam_io_rt.csv");
  const std::vector<std::vector<std::uint8_t>> rows{{1, 0, 1}, {0, 0, 0}, {1, 1, 1}};
  save_binary_csv(f.path, rows);
  const auto back = load_binary_csv(f.path);
  CHECK(back == rows);
}

TEST_CASE("csv parsing tolerates whitespace and blank lines") {
  TempFile f("slam_io_ws.csv");
  f.write("1, 0 ,1\r\n\n0,1,0\n");
  const auto rows = load_binary_csv(f.path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::uint8_t>{1, 0, 1});
  CHECK(rows[1] == std::vector<std::uint8_t>{0, 1, 0});
}

TEST_CASE("csv errors carry line numbers") {
  TempFile f("slam_io_err.csv");
  SUBCASE("non-binary entry") {
    f.write("1,0\n0,2\n");
    try {
      load_binary_csv(f.path);
      FAIL("expected throw");
    } catch (const std::runtime_error& ex) {
      const std::string msg = ex.what();
      CHECK(msg.find(":2:") != std::string::npos);
      CHECK(msg.find("non-binary") != std::string::npos);
    }
  }
  SUBCASE("ragged rows") {
    f.write("1,0\n1,0,1\n");
    try {
      load_binary_csv(f.path);
      FAIL("expected throw");
    } catch (const std::runtime_error& ex) {
      CHECK(std::string(ex.what()).find(":2:") != std::string::npos);
    }
  }
  SUBCASE("empty file") {
    f.write("");
    CHECK_THROWS_AS(load_binary_csv(f.path), std::runtime_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_binary_csv(f.path + ".nope"), std::runtime_error);
  }
}

TEST_CASE("q matrix loading") {
  TempFile f("slam_io_q.csv");
  f.write("1,0\n0,1\n1,1\n");
  const auto q = load_q_matrix(f.path);
  CHECK(q.J() == 3);
  CHECK(q.K() == 2);
  CHECK(q.row(2).to_string() == "11");
}

TEST_CASE("pattern set round trip") {
  TempFile f("slam_io_ps.txt");
  PatternSet a(3);
  a.add(AttributePattern::from_string("101"));
  a.add(AttributePattern::from_string("010"));
  save_pattern_set(f.path, a);
  const auto back = load_pattern_set(f.path);
  REQUIRE(back.size() == 2);
  CHECK(back.K() == 3);
  CHECK(back[0].to_string() == "101");
  CHECK(back[1].to_string() == "010");
}

TEST_CASE("pattern set error paths") {
  TempFile f("slam_io_psbad.txt");
  SUBCASE("bad character") {
    f.write("101\n1x1\n");
    try {
      load_pattern_set(f.path);
      FAIL("expected throw");
    } catch (const std::runtime_error& ex) {
      CHECK(std::string(ex.what()).find(":2:") != std::string::npos);
    }
  }
  SUBCASE("inconsistent lengths") {
    f.write("101\n10\n");
    CHECK_THROWS_AS(load_pattern_set(f.path), std::runtime_error);
  }
  SUBCASE("empty") {
    f.write("\n");
    CHECK_THROWS_AS(load_pattern_set(f.path), std::runtime_error);
  }
}

TEST_CASE("file digest is stable and content sensitive") {
  TempFile a("slam_io_dig_a.txt"), b("slam_io_dig_b.txt");
  a.write("hello world\n");
  b.write("hello world\n");
  CHECK(file_digest(a.path) == file_digest(b.path));
  CHECK(file_digest(a.path).size() == 16);
  b.write("hello worle\n");
  CHECK(file_digest(a.path) != file_digest(b.path));
  CHECK_THROWS(file_digest(a.path + ".nope"));
}

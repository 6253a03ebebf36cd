#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rvlab/io.hpp"
#include "support.hpp"

using namespace rvlab;
using rvlab::testing::vec;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rvlab_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("binary column files round trip") {
  Matrix m(3, 4);
  m << 1.0, -2.5, 1e-300, 3.0, 0.0, 7.0, -0.0, 1e300, 4.0, 5.0, 6.0, 8.0;
  const auto p = scratch("cols.bin").string();
  write_columns(p, m);
  CHECK(read_columns(p) == m);
  const std::string bytes = read_file(p);
  CHECK(bytes.size() == 16 + 8 * 12);
  CHECK(bytes.substr(0, 4) == "RVLB");
  write_file_atomic(p, "XXXX" + bytes.substr(4));
  CHECK_THROWS(read_columns(p));
  write_file_atomic(p, bytes.substr(0, 40));
  CHECK_THROWS(read_columns(p));
  const Matrix empty(2, 0);
  write_columns(p, empty);
  CHECK(read_columns(p).rows() == 2);
  CHECK(read_columns(p).cols() == 0);
}

TEST_CASE("csv vectors round trip to full precision") {
  Matrix m(2, 3);
  m << 0.1, 1.0 / 3.0, -7e-20, 2.0, 1e10, -0.5;
  const auto p = scratch("vecs.csv").string();
  write_vectors_csv(p, m);
  CHECK(read_vectors_csv(p) == m);
  const auto s = stack_columns({vec({1.0, 2.0}), vec({3.0, 4.0})});
  CHECK(s(0, 1) == 3.0);
  CHECK_THROWS(stack_columns({vec({1.0}), vec({1.0, 2.0})}));
}

TEST_CASE("spectral csv with json sidecar") {
  EmpiricalAngularMeasure m;
  m.directions = Matrix(2, 2);
  m.directions << 1.0, 0.0, 0.0, 1.0;
  m.weights = {0.25, 0.75};
  const auto p = scratch("spectral.csv").string();
  write_spectral(p, m, {1.5, 0.1, 20, {"TruncationWarning"}});
  const std::string text = read_file(p);
  CHECK(text.rfind("w,dir_0,dir_1\n", 0) == 0);
  const auto back = read_spectral_csv(p);
  CHECK(back.directions == m.directions);
  CHECK(back.weights == m.weights);
  const auto side = nlohmann::json::parse(read_file(p + ".json"));
  CHECK(side["normalizer"] == 1.5);
  CHECK(side["truncation_J"] == 20);
  CHECK(side["flags"][0] == "TruncationWarning");
}

TEST_CASE("content hashes") {
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(sha1_hex("") == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  // `git hash-object` of an empty file and of "hello\n".
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("atomic writes leave no temporary files") {
  const auto p = scratch("atomic.txt");
  write_file_atomic(p.string(), "first");
  write_file_atomic(p.string(), "second");
  CHECK(read_file(p.string()) == "second");
  for (const auto& e : fs::directory_iterator(p.parent_path())) CHECK(e.path().extension() != ".tmp");
  CHECK_THROWS(read_file(scratch("missing.txt").string()));
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tubalsr/io.hpp"
#include "tubalsr/rng.hpp"

using namespace tubalsr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tubalsr_io_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("TNS3 round trip is exact") {
  TempDir dir;
  Rng rng(100);
  Tensor3d t = rng.gaussian_tensor(3, 5, 4);
  const fs::path p = dir.path / "t.tns3";
  write_tns3(p, t);
  Tensor3d back = read_tns3(p);
  REQUIRE(back.same_dims(t));
  for (Eigen::Index i = 0; i < t.size(); ++i) CHECK(back.data()[i] == t.data()[i]);
  CHECK(fs::file_size(p) == 4 + 12 + 3 * 5 * 4 * 8);
}

TEST_CASE("TNS3 rejects bad files") {
  TempDir dir;
  const fs::path bad = dir.path / "bad.tns3";
  write_text_file(bad, "NOPE____________");
  CHECK_THROWS((void)read_tns3(bad));

  Rng rng(101);
  Tensor3d t = rng.gaussian_tensor(2, 2, 2);
  const fs::path p = dir.path / "t.tns3";
  write_tns3(p, t);
  auto bytes = read_text_file(p);
  write_text_file(dir.path / "trunc.tns3", bytes.substr(0, bytes.size() - 4));
  CHECK_THROWS((void)read_tns3(dir.path / "trunc.tns3"));
  write_text_file(dir.path / "pad.tns3", bytes + "xx");
  CHECK_THROWS((void)read_tns3(dir.path / "pad.tns3"));
}

TEST_CASE("slice CSV export/import round trip") {
  TempDir dir;
  Rng rng(102);
  Tensor3d t = rng.gaussian_tensor(4, 3, 2);
  const fs::path p = dir.path / "slice.csv";
  write_slice_csv(p, t, 1);
  Eigen::MatrixXd m = read_csv_matrix(p);
  REQUIRE(m.rows() == 4);
  REQUIRE(m.cols() == 3);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(m(i, j) == t(i, j, 1));
}

TEST_CASE("report CSV carries a header and parses back") {
  TempDir dir;
  const fs::path p = dir.path / "report.csv";
  write_csv(p, {"iteration", "objective"}, {{0, 1.5}, {1, 0.75}});
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,objective");
  std::string row;
  std::getline(in, row);
  CHECK(row.substr(0, 2) == "0,");
}

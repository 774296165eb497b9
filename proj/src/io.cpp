#include "tubalsr/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little, "TNS3 I/O assumes a little-endian host");

namespace tubalsr {
namespace {

constexpr char kMagic[4] = {'T', 'N', 'S', '3'};

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

}  // namespace

void write_tns3(const std::filesystem::path& path, const Tensor3d& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out.write(kMagic, 4);
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(t.n1()), static_cast<std::uint32_t>(t.n2()),
                                 static_cast<std::uint32_t>(t.n3())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!out) fail(path, "write failed");
}

Tensor3d read_tns3(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  char magic[4];
  std::uint32_t dims[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || std::memcmp(magic, kMagic, 4) != 0) fail(path, "not a TNS3 file");
  const std::uint64_t count = std::uint64_t(dims[0]) * dims[1] * dims[2];
  if (count > (1ull << 31)) fail(path, "unreasonable tensor size");
  Tensor3d t(dims[0], dims[1], dims[2]);
  in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) fail(path, "truncated payload");
  char extra;
  if (in.read(&extra, 1)) fail(path, "trailing bytes after payload");
  if (!t.all_finite()) fail(path, "non-finite values in payload");
  return t;
}

void write_slice_csv(const std::filesystem::path& path, const Tensor3d& t, Eigen::Index k) {
  if (k < 0 || k >= t.n3()) throw std::invalid_argument("write_slice_csv: slice index out of range");
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  out.precision(17);
  for (Eigen::Index i = 0; i < t.n1(); ++i) {
    for (Eigen::Index j = 0; j < t.n2(); ++j) {
      if (j) out << ',';
      out << t(i, j, k);
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size()) fail(path, "ragged CSV rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(path, "empty CSV");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  out.precision(17);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::invalid_argument("write_csv: row arity does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << content;
}

}  // namespace tubalsr

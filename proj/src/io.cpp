#include "rvlab/io.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <openssl/sha.h>

#include <json.hpp>

namespace rvlab {

namespace {

constexpr char kMagic[4] = {'R', 'V', 'L', 'B'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

std::vector<double> parse_row(const std::string& line, const std::string& path) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      row.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": bad number '" + cell + "'");
    }
  }
  return row;
}

}  // namespace

void write_columns(const std::string& path, const Matrix& columns) {
  static_assert(sizeof(double) == 8);
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(columns.rows()));
  put_u32(out, static_cast<std::uint32_t>(columns.cols()));
  const auto bytes = static_cast<std::size_t>(columns.size()) * sizeof(double);
  const std::size_t header = out.size();
  out.resize(header + bytes);
  if (bytes > 0) std::memcpy(out.data() + header, columns.data(), bytes);
  write_file_atomic(path, out);
}

Matrix read_columns(const std::string& path) {
  const std::string in = read_file(path);
  if (in.size() < 16 || std::memcmp(in.data(), kMagic, 4) != 0) throw std::runtime_error(path + ": not a column file");
  if (get_u32(in, 4) != kVersion) throw std::runtime_error(path + ": unsupported column file version");
  const std::uint32_t rows = get_u32(in, 8);
  const std::uint32_t cols = get_u32(in, 12);
  const std::size_t bytes = static_cast<std::size_t>(rows) * cols * sizeof(double);
  if (in.size() != 16 + bytes) throw std::runtime_error(path + ": truncated column file");
  Matrix m(rows, cols);
  if (bytes > 0) std::memcpy(m.data(), in.data() + 16, bytes);
  return m;
}

Matrix stack_columns(const std::vector<Vector>& vectors) {
  if (vectors.empty()) return Matrix(0, 0);
  Matrix m(vectors.front().size(), static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != m.rows()) throw std::invalid_argument("stacked vectors differ in dimension");
    m.col(static_cast<Eigen::Index>(i)) = vectors[i];
  }
  return m;
}

void write_vectors_csv(const std::string& path, const Matrix& columns) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    for (Eigen::Index i = 0; i < columns.rows(); ++i) out << (i ? "," : "") << columns(i, j);
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

Matrix read_vectors_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_row(line, path));
    if (rows.back().size() != rows.front().size()) throw std::runtime_error(path + ": ragged rows");
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t i = 0; i < rows[j].size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[j][i];
  return m;
}

void write_spectral(const std::string& path, const EmpiricalAngularMeasure& measure, const SpectralSidecar& sidecar) {
  std::ostringstream csv;
  measure.write_csv(csv);
  write_file_atomic(path, csv.str());
  nlohmann::json j;
  j["normalizer"] = sidecar.normalizer;
  j["se"] = sidecar.se;
  j["truncation_J"] = sidecar.truncation_j;
  j["flags"] = sidecar.flags;
  write_file_atomic(path + ".json", j.dump(2) + "\n");
}

EmpiricalAngularMeasure read_spectral_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("w", 0) != 0) throw std::runtime_error(path + ": missing spectral header");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(parse_row(line, path));
  EmpiricalAngularMeasure m;
  m.source = EmpiricalAngularMeasure::Source::theoretical_sampler;
  const Eigen::Index d = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()) - 1;
  m.directions.resize(d, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (static_cast<Eigen::Index>(rows[j].size()) != d + 1) throw std::runtime_error(path + ": ragged rows");
    m.weights.push_back(rows[j][0]);
    for (Eigen::Index i = 0; i < d; ++i) m.directions(i, static_cast<Eigen::Index>(j)) = rows[j][static_cast<std::size_t>(i) + 1];
  }
  return m;
}

std::string sha1_hex(const std::string& bytes) {
  std::array<unsigned char, SHA_DIGEST_LENGTH> digest{};
  SHA1(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest.data());
  std::ostringstream out;
  for (unsigned char c : digest) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
  return out.str();
}

std::string git_blob_hash(const std::string& bytes) {
  std::string blob = "blob " + std::to_string(bytes.size());
  blob.push_back('\0');
  return sha1_hex(blob + bytes);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rvlab

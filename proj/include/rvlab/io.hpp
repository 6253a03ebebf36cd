#pragma once

#include <string>
#include <vector>

#include "rvlab/estimators.hpp"
#include "rvlab/rv_core.hpp"

namespace rvlab {

// Binary column file: magic "RVLB", u32 version, u32 rows, u32 columns, then
// column-major little-endian doubles. Each column is one sample vector.
void write_columns(const std::string& path, const Matrix& columns);
Matrix read_columns(const std::string& path);

Matrix stack_columns(const std::vector<Vector>& vectors);

// One vector per row, comma separated, no header.
void write_vectors_csv(const std::string& path, const Matrix& columns);
Matrix read_vectors_csv(const std::string& path);

struct SpectralSidecar {
  double normalizer = 0.0;
  double se = 0.0;
  int truncation_j = -1;
  std::vector<std::string> flags;
};

// Writes `w,dir_0,...` CSV at path and the sidecar JSON at path + ".json".
void write_spectral(const std::string& path, const EmpiricalAngularMeasure& measure, const SpectralSidecar& sidecar);
EmpiricalAngularMeasure read_spectral_csv(const std::string& path);

std::string sha1_hex(const std::string& bytes);
// Hash git assigns to a blob with these contents.
std::string git_blob_hash(const std::string& bytes);
std::string read_file(const std::string& path);
// Writes through a temporary file and a rename so readers never see a partial file.
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace rvlab

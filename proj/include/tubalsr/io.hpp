#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

#include "tubalsr/tensor3.hpp"

namespace tubalsr {

/// TNS3 container: 4-byte magic "TNS3", three u32 little-endian dims
/// (n1, n2, n3), then n1*n2*n3 little-endian f64 values, row-major with the
/// third index fastest.
void write_tns3(const std::filesystem::path& path, const Tensor3d& t);
Tensor3d read_tns3(const std::filesystem::path& path);

/// One frontal slice as plain-decimal CSV, one row per line.
void write_slice_csv(const std::filesystem::path& path, const Tensor3d& t, Eigen::Index k);
Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);

/// Report CSV with a header row; every row must match the header's arity.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace tubalsr

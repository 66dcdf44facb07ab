#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fracred/types.hpp"

namespace fracred {

/// Raised when reading or writing a file fails.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Decimal form with 17 significant digits, enough to round-trip a double.
std::string format_double(double x);

/// Rows of "node,re,im" with one line per entry of `values`.
std::string vector_csv(const std::vector<int>& node_ids, const Vec& values);

/// Rows "row_node,re_0,im_0,re_1,im_1,..." for a matrix with one row per
/// node id; the header names the column node ids.
std::string matrix_csv(const std::vector<int>& row_nodes, const std::vector<int>& col_nodes,
                       const CMat& m);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Parses a headerless numeric CSV; blank lines and lines starting with '#'
/// are skipped.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path);

}  // namespace fracred

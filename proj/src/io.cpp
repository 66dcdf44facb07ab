#include "fracred/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace fracred {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string vector_csv(const std::vector<int>& node_ids, const Vec& values) {
  if (static_cast<Eigen::Index>(node_ids.size()) != values.size()) {
    throw ValidationError("vector_csv: node list and values differ in length");
  }
  std::ostringstream os;
  os << "node,re,im\n";
  for (size_t i = 0; i < node_ids.size(); ++i) {
    os << node_ids[i] << "," << format_double(values[i].real()) << ","
       << format_double(values[i].imag()) << "\n";
  }
  return os.str();
}

std::string matrix_csv(const std::vector<int>& row_nodes, const std::vector<int>& col_nodes,
                       const CMat& m) {
  if (static_cast<Eigen::Index>(row_nodes.size()) != m.rows() ||
      static_cast<Eigen::Index>(col_nodes.size()) != m.cols()) {
    throw ValidationError("matrix_csv: node lists do not match the matrix shape");
  }
  std::ostringstream os;
  os << "node";
  for (int c : col_nodes) os << ",re_" << c << ",im_" << c;
  os << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    os << row_nodes[r];
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      os << "," << format_double(m(r, c).real()) << "," << format_double(m(r, c).imag());
    }
    os << "\n";
  }
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                              ": non-numeric entry '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace fracred

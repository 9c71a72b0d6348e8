#include "tsmor/matrix_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tsmor/errors.hpp"

namespace tsmor {

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& origin, bool exact) {
  long rows = -1;
  long cols = -1;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
    throw InputError(origin + ": missing or invalid `rows cols` header");
  }
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) {
      std::string token;
      if (!(in >> token)) {
        throw InputError(origin + ": expected " + std::to_string(rows * cols) +
                         " values, found " + std::to_string(i * cols + j));
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || !std::isfinite(v)) {
        throw InputError(origin + ": invalid value '" + token + "' at (" + std::to_string(i + 1) +
                         "," + std::to_string(j + 1) + ")");
      }
      m(i, j) = v;
    }
  }
  std::string extra;
  if (exact && in >> extra) {
    throw InputError(origin + ": trailing data after " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " matrix");
  }
  return m;
}

Eigen::MatrixXd read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open matrix file '" + path.string() + "'");
  }
  return read_matrix(in, path.string());
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_matrix_file(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) {
    throw InputError("cannot write matrix file '" + path.string() + "'");
  }
  write_matrix(out, m);
}

}  // namespace tsmor

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

namespace tsmor {

// Dense matrix text format: a header line `rows cols`, then `rows` lines of
// `cols` whitespace-separated decimal values in row-major order.
// Reads one matrix; with `exact` set, anything after it is an error.
Eigen::MatrixXd read_matrix(std::istream& in, const std::string& origin = "<stream>",
                            bool exact = true);
Eigen::MatrixXd read_matrix_file(const std::filesystem::path& path);

// Values are written with 17 significant digits so that reading back is exact.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
void write_matrix_file(const std::filesystem::path& path, const Eigen::MatrixXd& m);

// Shortest round-trip decimal for a double (17 significant digits, %.17g).
std::string format_double(double v);

}  // namespace tsmor

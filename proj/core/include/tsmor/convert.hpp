#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <Eigen/Dense>

namespace tsmor {

// Real numeric variables of a MATLAB level-5 MAT-file (dense or sparse,
// plain or zlib-compressed), densified. Non-numeric variables are skipped;
// complex ones raise InputError.
std::map<std::string, Eigen::MatrixXd> read_mat_file(const std::filesystem::path& path);

// MatrixMarket `matrix` objects: coordinate or array layout, real/integer/
// pattern fields, general/symmetric/skew-symmetric symmetry.
Eigen::MatrixXd read_matrix_market(const std::filesystem::path& path);

// Converts a .mat (every numeric variable to <out_dir>/<name>.txt) or a
// .mtx file (to <out_dir>/<stem>.txt). Returns the files written.
std::map<std::string, std::filesystem::path> convert_to_dense_text(
    const std::filesystem::path& input, const std::filesystem::path& out_dir);

}  // namespace tsmor

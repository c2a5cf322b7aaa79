#pragma once

#include <Eigen/Dense>

#include <string>

namespace steinmp {

// Doubles rendered with 17 significant digits (round-trip exact).
std::string format_double(double v);

// Plain numeric CSV, no header, one matrix row per line.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

}  // namespace steinmp

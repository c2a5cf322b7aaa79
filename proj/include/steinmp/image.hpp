#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "steinmp/rng.hpp"

namespace steinmp {

// Reads a P2 (ASCII) or P5 (binary) grayscale PGM with maxval 255. Values
// come back as doubles in [0, 255]. Throws std::runtime_error on a bad magic
// number, maxval != 255 or a truncated payload.
Eigen::MatrixXd read_pgm(const std::string& path);

// Writes P5 with maxval 255, clamping to [0, 255] and rounding. Writing the
// result of read_pgm reproduces a P5 file byte for byte.
void write_pgm(const std::string& path, const Eigen::MatrixXd& image);

// Blocky synthetic test image (random axis-aligned rectangles of constant
// gray over a mid-gray background).
Eigen::MatrixXd make_piecewise_constant_image(int rows, int cols,
                                              std::uint64_t seed);

Eigen::MatrixXd add_gaussian_noise(const Eigen::MatrixXd& image, double sigma,
                                   Rng& rng);

}  // namespace steinmp

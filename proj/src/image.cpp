#include "steinmp/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace steinmp {

namespace {

// Next whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int parse_int(std::istream& in, const char* what) {
  std::string tok = next_token(in);
  try {
    std::size_t pos = 0;
    int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("read_pgm: bad ") + what);
  }
}

}  // namespace

Eigen::MatrixXd read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pgm: cannot open " + path);

  std::string magic = next_token(in);
  if (magic != "P2" && magic != "P5") {
    throw std::runtime_error("read_pgm: unsupported magic '" + magic +
                             "' (expected P2 or P5)");
  }
  int width = parse_int(in, "width");
  int height = parse_int(in, "height");
  int maxval = parse_int(in, "maxval");
  if (width < 1 || height < 1) {
    throw std::runtime_error("read_pgm: bad dimensions");
  }
  if (maxval != 255) {
    throw std::runtime_error("read_pgm: maxval must be 255, got " +
                             std::to_string(maxval));
  }

  Eigen::MatrixXd img(height, width);
  if (magic == "P5") {
    // Exactly one whitespace byte separates the header from the payload.
    std::string buf(static_cast<std::size_t>(width) * height, '\0');
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
      throw std::runtime_error("read_pgm: truncated payload");
    }
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        img(r, c) = static_cast<unsigned char>(
            buf[static_cast<std::size_t>(r) * width + c]);
      }
    }
  } else {
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        int v = parse_int(in, "pixel");
        if (v < 0 || v > 255) {
          throw std::runtime_error("read_pgm: pixel out of range");
        }
        img(r, c) = v;
      }
    }
  }
  return img;
}

void write_pgm(const std::string& path, const Eigen::MatrixXd& image) {
  if (image.rows() < 1 || image.cols() < 1) {
    throw std::invalid_argument("write_pgm: empty image");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
  out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < image.rows(); ++r) {
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      double v = std::clamp(image(r, c), 0.0, 255.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v))));
    }
  }
  if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
}

Eigen::MatrixXd make_piecewise_constant_image(int rows, int cols,
                                              std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd img = Eigen::MatrixXd::Constant(rows, cols, 96.0);
  const int blocks = 6;
  for (int b = 0; b < blocks; ++b) {
    int r0 = static_cast<int>(rng.uniform(0.0, rows * 0.75));
    int c0 = static_cast<int>(rng.uniform(0.0, cols * 0.75));
    int h = 2 + static_cast<int>(rng.uniform(0.0, rows * 0.5));
    int w = 2 + static_cast<int>(rng.uniform(0.0, cols * 0.5));
    double level = std::floor(rng.uniform(16.0, 240.0));
    for (int r = r0; r < std::min(rows, r0 + h); ++r) {
      for (int c = c0; c < std::min(cols, c0 + w); ++c) {
        img(r, c) = level;
      }
    }
  }
  return img;
}

Eigen::MatrixXd add_gaussian_noise(const Eigen::MatrixXd& image, double sigma,
                                   Rng& rng) {
  Eigen::MatrixXd noisy = image;
  for (Eigen::Index r = 0; r < noisy.rows(); ++r) {
    for (Eigen::Index c = 0; c < noisy.cols(); ++c) {
      noisy(r, c) += sigma * rng.normal();
    }
  }
  return noisy;
}

}  // namespace steinmp

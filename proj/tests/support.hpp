#pragma once

// Fixtures and hand-rolled generators shared by the unit tests.

#include "sgw/mesh.hpp"
#include "sgw/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace sgw::test {

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("sgw-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline TriangleMesh tetrahedron() {
  return TriangleMesh::create({{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}},
                              {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}});
}

/// Two unit equilateral triangles sharing the edge (0, 1).
inline TriangleMesh equilateral_pair() {
  const double h = std::sqrt(3.0) / 2.0;
  return TriangleMesh::create({{0, 0, 0}, {1, 0, 0}, {0.5, h, 0}, {0.5, -h, 0}}, {{0, 1, 2}, {1, 0, 3}});
}

/// n x n vertex planar grid on [0, 1]^2, each square split along a diagonal.
inline TriangleMesh planar_grid(int n) {
  std::vector<Vec3> v;
  std::vector<Triangle> t;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) v.emplace_back(double(i) / (n - 1), double(j) / (n - 1), 0.0);
  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      const int a = j * n + i;
      t.push_back({a, a + 1, a + n + 1});
      t.push_back({a, a + n + 1, a + n});
    }
  }
  return TriangleMesh::create(std::move(v), std::move(t));
}

/// Uniform random rotation (quaternion method).
inline Eigen::Matrix3d random_rotation(SplitMix64& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform(0.0, 2.0 * M_PI);
  const double u3 = rng.uniform(0.0, 2.0 * M_PI);
  const Eigen::Quaterniond q(std::sqrt(u1) * std::cos(u3), std::sqrt(1 - u1) * std::sin(u2),
                             std::sqrt(1 - u1) * std::cos(u2), std::sqrt(u1) * std::sin(u3));
  return q.normalized().toRotationMatrix();
}

inline Vec3 random_vector(SplitMix64& rng, double scale) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

/// Standard normal via Box-Muller.
inline double normal(SplitMix64& rng) {
  const double u = 1.0 - rng.uniform();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * rng.uniform());
}

inline Eigen::MatrixXd normal_matrix(SplitMix64& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline double max_relative_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return ((a - b).array().abs() / b.array().abs().max(1e-300)).maxCoeff();
}

}  // namespace sgw::test

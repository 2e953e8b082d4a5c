#pragma once

#include "sgw/mesh.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <filesystem>
#include <string>

namespace sgw {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class AreaScheme {
  /// Meyer et al. mixed Voronoi areas (obtuse triangles split area/2, area/4).
  mixed_voronoi,
  /// One third of each incident triangle's area.
  barycentric,
};

const char* to_string(AreaScheme scheme) noexcept;

/// Discrete Laplace-Beltrami operator L = A^{-1} W.
struct LaplacianPair {
  /// Cotangent stiffness matrix: W_ii = sum_k c_ik, W_ij = -c_ij.
  SparseMatrix stiffness;
  /// Diagonal of the mass matrix (per-vertex cell areas).
  Eigen::VectorXd mass;

  int size() const noexcept { return static_cast<int>(mass.size()); }
};

/// Assembles W and A with c_ij = (cot alpha_ij + cot beta_ij) / 2 (one
/// cotangent on boundary edges). Obtuse weights are kept as they are.
/// Throws NumericalError when an angle is below 1e-8 rad.
LaplacianPair cotangent_weights(const TriangleMesh& mesh,
                                AreaScheme scheme = AreaScheme::mixed_voronoi);

/// Returns A^{-1} W f.
Eigen::VectorXd apply_operator(const LaplacianPair& lap, const Eigen::VectorXd& f);

/// Writes "i j value" lines: first all nonzeros of W (row-major order), then
/// "i i a_i" for the mass diagonal, each section preceded by a '#' header.
void write_coo(const LaplacianPair& lap, const std::filesystem::path& path);

}  // namespace sgw

#pragma once

#include "sgw/eigen_solver.hpp"
#include "sgw/mesh.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace sgw {

/// Geometry rebuilt from a truncated eigenbasis. Not a TriangleMesh: low-order
/// reconstructions legitimately collapse triangles (k = 1 maps every vertex to
/// the centroid), which TriangleMesh validation would reject.
struct ReconstructedMesh {
  /// m x 3 vertex positions.
  Eigen::MatrixXd positions;
  std::vector<Triangle> triangles;
  int basis_size = 0;
};

/// Replaces each coordinate function x by sum_{l<=k} <x, phi_l>_A phi_l.
/// Throws InvalidParam when k is outside [1, es.count()] or the system does
/// not belong to the mesh.
ReconstructedMesh spectral_reconstruct(const TriangleMesh& mesh, const EigenSystem& es, int k);

void write_off(const ReconstructedMesh& mesh, const std::filesystem::path& path);

struct ReconstructionReport {
  std::vector<int> ks;
  std::vector<double> nmse;
};

/// NMSE(k) = sum_i a_i |v_i - v^_i|^2 / sum_i a_i |v_i - c|^2 with c the
/// A-weighted centroid. With `area_weighted == false` every a_i is replaced by
/// 1 (the reconstruction itself stays an A-projection). The area-weighted
/// curve is summed over the A-orthogonal mode energies, so NMSE(1) = 1 exactly
/// and the values never increase with k.
ReconstructionReport nmse_curve(const TriangleMesh& mesh, const EigenSystem& es,
                                const std::vector<int>& ks, bool area_weighted = true);

void write_nmse_csv(const ReconstructionReport& report, const std::filesystem::path& path);

}  // namespace sgw

#pragma once

#include "sgw/laplacian.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>

namespace sgw {

/// The k smallest eigenpairs of W phi = lambda A phi.
struct EigenSystem {
  /// Ascending eigenvalues.
  Eigen::VectorXd eigenvalues;
  /// m x k, column l is phi_l, A-orthonormal.
  Eigen::MatrixXd eigenfunctions;
  /// Mass diagonal the eigenfunctions are orthonormal against.
  Eigen::VectorXd mass;
  /// True when column 0 is exactly the constant function 1/sqrt(sum a_i).
  bool constant_first = false;

  int count() const noexcept { return static_cast<int>(eigenvalues.size()); }
  int vertex_count() const noexcept { return static_cast<int>(mass.size()); }

  /// Leading `k` eigenpairs. Throws InvalidParam when k > count().
  EigenSystem truncated(int k) const;
};

enum class EigenMethod {
  /// Dense for small problems (m <= 200 or k close to m), otherwise sparse.
  automatic,
  /// Shift-invert block Krylov iteration with restarts.
  sparse,
  /// Full symmetric eigendecomposition.
  dense,
};

struct SolveOptions {
  EigenMethod method = EigenMethod::automatic;
  /// Bound on ||B u - lambda u|| / max(1, lambda_k) for the symmetric
  /// reduction B = A^{-1/2} W A^{-1/2}.
  double tolerance = 1e-10;
  /// Restart cap; 0 means 50 * k.
  int max_restarts = 0;
};

/// Solves for the k smallest eigenpairs. The constant null vector is deflated
/// exactly (lambda_1 = 0); the remaining vectors are sign-fixed so that their
/// largest-magnitude entry is positive.
/// Throws InvalidParam (k out of range), DegenerateMass (a_i <= 0) or
/// ConvergenceError.
EigenSystem solve_smallest(const LaplacianPair& lap, int k, const SolveOptions& options = {});

/// (lambda_k / 20, lambda_k). Throws InvalidParam when k < 2.
std::pair<double, double> spectrum_bounds(const EigenSystem& es);

/// max |<phi_k, phi_l>_A - delta_kl|.
double orthonormality_defect(const EigenSystem& es);

/// max_l ||W phi_l - lambda_l A phi_l|| / ||A phi_l||.
double max_relative_residual(const LaplacianPair& lap, const EigenSystem& es);

/// Flips each column so its largest-magnitude entry (first one on ties) is
/// positive.
void fix_signs(Eigen::MatrixXd& vectors);

// Spectrum cache: little-endian binary blob
//   magic "SGWEIG\0\0", u32 version, u64 mesh hash, u32 area scheme,
//   u32 m, u32 k, u8 constant_first, f64 mass[m], f64 lambda[k], f64 phi[m*k]
// (phi column-major).

struct CachedSpectrum {
  std::uint64_t mesh_hash = 0;
  AreaScheme scheme = AreaScheme::mixed_voronoi;
  EigenSystem system;
};

void save_spectrum(const std::filesystem::path& path, const CachedSpectrum& entry);

/// Returns nullopt when the file is missing; throws IoError when it exists but
/// is corrupt or of another version.
std::optional<CachedSpectrum> load_spectrum(const std::filesystem::path& path);

}  // namespace sgw

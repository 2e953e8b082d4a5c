#include "sgw/eigen_solver.hpp"

#include "sgw/error.hpp"
#include "sgw/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <unistd.h>

namespace sgw {

EigenSystem EigenSystem::truncated(int k) const {
  if (k < 1 || k > count()) {
    throw InvalidParam("cannot truncate " + std::to_string(count()) + " eigenpairs to " +
                       std::to_string(k));
  }
  EigenSystem out;
  out.eigenvalues = eigenvalues.head(k);
  out.eigenfunctions = eigenfunctions.leftCols(k);
  out.mass = mass;
  out.constant_first = constant_first;
  return out;
}

void fix_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0.0) vectors.col(c) = -vectors.col(c);
  }
}

namespace {

struct Reduced {
  SparseMatrix b;         // A^{-1/2} W A^{-1/2}
  Eigen::VectorXd unit;   // normalized sqrt(a): the null vector of b
};

Reduced reduce(const LaplacianPair& lap) {
  const Eigen::VectorXd inv_sqrt = lap.mass.cwiseSqrt().cwiseInverse();
  Reduced r;
  r.b = inv_sqrt.asDiagonal() * lap.stiffness * inv_sqrt.asDiagonal();
  r.b.makeCompressed();
  r.unit = lap.mass.cwiseSqrt();
  r.unit /= r.unit.norm();
  return r;
}

/// Ritz pairs (ascending) of b restricted to the complement of `unit`,
/// computed from a full dense decomposition.
void solve_dense(const Reduced& r, int nev, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index m = r.b.rows();
  const Eigen::MatrixXd b = Eigen::MatrixXd(r.b);

  // Householder reflector mapping `unit` onto -e_1; its trailing m-1 columns
  // span the orthogonal complement.
  Eigen::VectorXd v = r.unit;
  v[0] += 1.0;
  const double beta = 2.0 / v.squaredNorm();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(m, m) - beta * v * v.transpose();
  const Eigen::MatrixXd basis = h.rightCols(m - 1);
  const Eigen::MatrixXd projected = basis.transpose() * b * basis;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(projected);
  if (eig.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", NAN);
  values = eig.eigenvalues().head(nev);
  vectors = basis * eig.eigenvectors().leftCols(nev);
}

/// Orthonormalizes the columns of `block` against `unit`, the first `used`
/// columns of `basis`, and each other (classical Gram-Schmidt applied twice).
/// Columns that collapse are dropped. Returns the surviving columns.
Eigen::MatrixXd orthonormalize(Eigen::MatrixXd block, const Eigen::VectorXd& unit,
                               const Eigen::MatrixXd& basis, Eigen::Index used) {
  const auto prior = basis.leftCols(used);
  Eigen::MatrixXd out(block.rows(), block.cols());
  Eigen::Index kept = 0;
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    Eigen::VectorXd x = block.col(c);
    const double start = x.norm();
    if (start == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      x -= unit * unit.dot(x);
      if (used > 0) x -= prior * (prior.transpose() * x);
      if (kept > 0) x -= out.leftCols(kept) * (out.leftCols(kept).transpose() * x);
    }
    const double norm = x.norm();
    if (norm <= 1e-10 * start) continue;
    out.col(kept++) = x / norm;
  }
  return out.leftCols(kept);
}

void solve_sparse(const Reduced& r, int nev, const SolveOptions& options, int k,
                  Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index m = r.b.rows();
  const Eigen::Index complement = m - 1;

  // Shift-invert about a point just below the (positive semi-definite)
  // spectrum so the factorized operator is positive definite.
  const double scale = r.b.diagonal().mean();
  const double shift = -1e-2 * scale;
  SparseMatrix shifted = r.b;
  for (Eigen::Index i = 0; i < m; ++i) shifted.coeffRef(i, i) -= shift;
  Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
  if (factor.info() != Eigen::Success)
    throw NumericalError("factorization of the shifted operator failed");

  const Eigen::Index block = std::min<Eigen::Index>(complement, nev + std::max(8, nev / 2));
  constexpr int kDepth = 3;
  const Eigen::Index max_basis = std::min<Eigen::Index>(complement, kDepth * block);
  const int max_restarts = options.max_restarts > 0 ? options.max_restarts : 50 * k;

  SplitMix64 rng(0x5367577356ULL);
  Eigen::MatrixXd start(m, block);
  for (Eigen::Index c = 0; c < block; ++c)
    for (Eigen::Index i = 0; i < m; ++i) start(i, c) = rng.uniform(-1.0, 1.0);

  Eigen::MatrixXd basis(m, max_basis);
  double attained = INFINITY;
  for (int restart = 0; restart < max_restarts; ++restart) {
    Eigen::Index used = 0;
    Eigen::MatrixXd next = start;
    while (used < max_basis) {
      Eigen::MatrixXd q = orthonormalize(std::move(next), r.unit, basis, used);
      const Eigen::Index take = std::min<Eigen::Index>(q.cols(), max_basis - used);
      if (take == 0) break;
      basis.middleCols(used, take) = q.leftCols(take);
      used += take;
      if (used >= max_basis) break;
      next = factor.solve(Eigen::MatrixXd(q.leftCols(take)));
    }

    const auto v = basis.leftCols(used);
    const Eigen::MatrixXd bv = r.b * v;
    Eigen::MatrixXd projected = v.transpose() * bv;
    projected = 0.5 * (projected + projected.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(projected);
    if (eig.info() != Eigen::Success) throw ConvergenceError("Rayleigh-Ritz step failed", attained);

    const Eigen::Index wanted = std::min<Eigen::Index>(nev, used);
    const Eigen::MatrixXd ritz = v * eig.eigenvectors().leftCols(wanted);
    const Eigen::MatrixXd britz = bv * eig.eigenvectors().leftCols(wanted);
    const Eigen::VectorXd theta = eig.eigenvalues().head(wanted);
    const double bound = options.tolerance * std::max(1.0, std::abs(theta[wanted - 1]));

    attained = 0.0;
    for (Eigen::Index c = 0; c < wanted; ++c)
      attained = std::max(attained, (britz.col(c) - theta[c] * ritz.col(c)).norm());

    if (wanted == nev && attained <= bound) {
      values = theta;
      vectors = ritz;
      return;
    }
    const Eigen::Index keep = std::min<Eigen::Index>(block, used);
    start = v * eig.eigenvectors().leftCols(keep);
  }
  throw ConvergenceError("eigensolver exhausted " + std::to_string(max_restarts) + " restarts",
                         attained);
}

}  // namespace

EigenSystem solve_smallest(const LaplacianPair& lap, int k, const SolveOptions& options) {
  const int m = lap.size();
  if (k < 1 || k > m)
    throw InvalidParam("k must lie in [1, " + std::to_string(m) + "], got " + std::to_string(k));
  for (int i = 0; i < m; ++i) {
    if (!(lap.mass[i] > 0.0))
      throw DegenerateMass("vertex " + std::to_string(i) + " has non-positive mass");
  }

  const Reduced reduced = reduce(lap);
  const int nev = k - 1;

  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  if (nev > 0) {
    bool dense = options.method == EigenMethod::dense;
    if (options.method == EigenMethod::automatic) dense = m <= 200 || 3 * k >= m;
    if (dense)
      solve_dense(reduced, nev, values, vectors);
    else
      solve_sparse(reduced, nev, options, k, values, vectors);
  }

  EigenSystem es;
  es.mass = lap.mass;
  es.constant_first = true;
  es.eigenvalues.resize(k);
  es.eigenvalues[0] = 0.0;
  es.eigenfunctions.resize(m, k);
  es.eigenfunctions.col(0).setConstant(1.0 / std::sqrt(lap.mass.sum()));
  if (nev > 0) {
    es.eigenvalues.tail(nev) = values;
    const Eigen::VectorXd inv_sqrt = lap.mass.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd phi = inv_sqrt.asDiagonal() * vectors;
    fix_signs(phi);
    es.eigenfunctions.rightCols(nev) = phi;
  }
  return es;
}

std::pair<double, double> spectrum_bounds(const EigenSystem& es) {
  if (es.count() < 2) throw InvalidParam("spectrum bounds need at least 2 eigenpairs");
  const double lmax = es.eigenvalues[es.count() - 1];
  return {lmax / 20.0, lmax};
}

double orthonormality_defect(const EigenSystem& es) {
  const Eigen::MatrixXd gram =
      es.eigenfunctions.transpose() * es.mass.asDiagonal() * es.eigenfunctions;
  return (gram - Eigen::MatrixXd::Identity(es.count(), es.count())).cwiseAbs().maxCoeff();
}

double max_relative_residual(const LaplacianPair& lap, const EigenSystem& es) {
  double worst = 0.0;
  for (int l = 0; l < es.count(); ++l) {
    const Eigen::VectorXd aphi = lap.mass.cwiseProduct(es.eigenfunctions.col(l));
    const Eigen::VectorXd r = lap.stiffness * es.eigenfunctions.col(l) - es.eigenvalues[l] * aphi;
    worst = std::max(worst, r.norm() / aphi.norm());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Cache files

namespace {

constexpr char kMagic[8] = {'S', 'G', 'W', 'E', 'I', 'G', 0, 0};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

void save_spectrum(const std::filesystem::path& path, const CachedSpectrum& entry) {
  const EigenSystem& es = entry.system;
  const auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache file '" + tmp + "'");
    out.write(kMagic, sizeof(kMagic));
    put(out, kVersion);
    put(out, entry.mesh_hash);
    put(out, static_cast<std::uint32_t>(entry.scheme));
    put(out, static_cast<std::uint32_t>(es.vertex_count()));
    put(out, static_cast<std::uint32_t>(es.count()));
    put(out, static_cast<std::uint8_t>(es.constant_first ? 1 : 0));
    out.write(reinterpret_cast<const char*>(es.mass.data()),
              static_cast<std::streamsize>(sizeof(double) * es.mass.size()));
    out.write(reinterpret_cast<const char*>(es.eigenvalues.data()),
              static_cast<std::streamsize>(sizeof(double) * es.eigenvalues.size()));
    out.write(reinterpret_cast<const char*>(es.eigenfunctions.data()),
              static_cast<std::streamsize>(sizeof(double) * es.eigenfunctions.size()));
    if (!out) throw IoError("short write to cache file '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::optional<CachedSpectrum> load_spectrum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("'" + path.string() + "' is not a spectrum cache file");
  if (get<std::uint32_t>(in) != kVersion)
    throw IoError("'" + path.string() + "' has an unsupported cache version");

  CachedSpectrum entry;
  entry.mesh_hash = get<std::uint64_t>(in);
  entry.scheme = static_cast<AreaScheme>(get<std::uint32_t>(in));
  const auto m = get<std::uint32_t>(in);
  const auto k = get<std::uint32_t>(in);
  EigenSystem& es = entry.system;
  es.constant_first = get<std::uint8_t>(in) != 0;
  if (!in || k == 0 || k > m) throw IoError("'" + path.string() + "' has a corrupt header");
  es.mass.resize(m);
  es.eigenvalues.resize(k);
  es.eigenfunctions.resize(m, k);
  in.read(reinterpret_cast<char*>(es.mass.data()), static_cast<std::streamsize>(sizeof(double) * m));
  in.read(reinterpret_cast<char*>(es.eigenvalues.data()),
          static_cast<std::streamsize>(sizeof(double) * k));
  in.read(reinterpret_cast<char*>(es.eigenfunctions.data()),
          static_cast<std::streamsize>(sizeof(double) * m * k));
  if (!in) throw IoError("'" + path.string() + "' is truncated");
  return entry;
}

}  // namespace sgw

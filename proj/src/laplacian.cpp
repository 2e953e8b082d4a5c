#include "sgw/laplacian.hpp"

#include "sgw/error.hpp"

#include <cmath>
#include <fstream>
#include <vector>

namespace sgw {

const char* to_string(AreaScheme scheme) noexcept {
  switch (scheme) {
    case AreaScheme::mixed_voronoi: return "mixed";
    case AreaScheme::barycentric: return "barycentric";
  }
  return "unknown";
}

namespace {

constexpr double kMinAngle = 1e-8;

struct Corner {
  double cot;  // cotangent of the interior angle
  bool obtuse;
};

Corner corner_at(const Vec3& apex, const Vec3& a, const Vec3& b, int face) {
  const Vec3 u = a - apex;
  const Vec3 v = b - apex;
  const double dot = u.dot(v);
  const double cross = u.cross(v).norm();
  const double angle = std::atan2(cross, dot);
  if (angle < kMinAngle || angle > M_PI - kMinAngle) {
    throw NumericalError("triangle " + std::to_string(face) +
                         " has a near-degenerate angle; cotangent weight would overflow");
  }
  return {dot / cross, dot < 0.0};
}

}  // namespace

LaplacianPair cotangent_weights(const TriangleMesh& mesh, AreaScheme scheme) {
  const int m = mesh.vertex_count();
  const auto& v = mesh.vertices();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.triangles().size() * 6);
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(m);

  int face = 0;
  for (const Triangle& t : mesh.triangles()) {
    const Vec3& p0 = v[t[0]];
    const Vec3& p1 = v[t[1]];
    const Vec3& p2 = v[t[2]];
    const Corner c[3] = {corner_at(p0, p1, p2, face), corner_at(p1, p2, p0, face),
                         corner_at(p2, p0, p1, face)};

    // The angle at corner i is opposite the edge (i+1, i+2).
    for (int i = 0; i < 3; ++i) {
      const int a = t[(i + 1) % 3];
      const int b = t[(i + 2) % 3];
      const double w = 0.5 * c[i].cot;
      triplets.emplace_back(a, b, -w);
      triplets.emplace_back(b, a, -w);
    }

    const double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
    if (scheme == AreaScheme::barycentric) {
      for (int i = 0; i < 3; ++i) mass[t[i]] += area / 3.0;
    } else if (c[0].obtuse || c[1].obtuse || c[2].obtuse) {
      for (int i = 0; i < 3; ++i) mass[t[i]] += c[i].obtuse ? area / 2.0 : area / 4.0;
    } else {
      // Voronoi region of corner i: (|e_ij|^2 cot(k) + |e_ik|^2 cot(j)) / 8.
      for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3;
        const int k = (i + 2) % 3;
        const double eij = (v[t[j]] - v[t[i]]).squaredNorm();
        const double eik = (v[t[k]] - v[t[i]]).squaredNorm();
        mass[t[i]] += (eij * c[k].cot + eik * c[j].cot) / 8.0;
      }
    }
    ++face;
  }

  SparseMatrix offdiag(m, m);
  offdiag.setFromTriplets(triplets.begin(), triplets.end());

  // Diagonal from the assembled off-diagonal row so rows sum to zero.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  for (int col = 0; col < offdiag.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(offdiag, col); it; ++it) diag[it.row()] -= it.value();

  triplets.clear();
  for (int col = 0; col < offdiag.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(offdiag, col); it; ++it)
      triplets.emplace_back(it.row(), it.col(), it.value());
  for (int i = 0; i < m; ++i) triplets.emplace_back(i, i, diag[i]);

  LaplacianPair lap;
  lap.stiffness.resize(m, m);
  lap.stiffness.setFromTriplets(triplets.begin(), triplets.end());
  lap.stiffness.makeCompressed();
  lap.mass = std::move(mass);
  return lap;
}

Eigen::VectorXd apply_operator(const LaplacianPair& lap, const Eigen::VectorXd& f) {
  if (f.size() != lap.size()) {
    throw DimensionMismatch("function has " + std::to_string(f.size()) + " values, mesh has " +
                            std::to_string(lap.size()) + " vertices");
  }
  Eigen::VectorXd wf = lap.stiffness * f;
  return wf.cwiseQuotient(lap.mass);
}

void write_coo(const LaplacianPair& lap, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  const Eigen::SparseMatrix<double, Eigen::RowMajor> w = lap.stiffness;
  char buf[96];
  out << "# stiffness " << w.rows() << " " << w.nonZeros() << "\n";
  for (int row = 0; row < w.outerSize(); ++row) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(w, row); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", row, static_cast<int>(it.col()), it.value());
      out << buf;
    }
  }
  out << "# mass " << lap.mass.size() << "\n";
  for (int i = 0; i < lap.mass.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", i, i, lap.mass[i]);
    out << buf;
  }
}

}  // namespace sgw

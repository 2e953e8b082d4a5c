#include "sgw/reconstruct.hpp"

#include "sgw/csv.hpp"
#include "sgw/error.hpp"

#include <fstream>
#include <vector>

namespace sgw {

namespace {

Eigen::MatrixXd positions_of(const TriangleMesh& mesh) {
  Eigen::MatrixXd v(mesh.vertex_count(), 3);
  for (int i = 0; i < mesh.vertex_count(); ++i) v.row(i) = mesh.vertices()[i].transpose();
  return v;
}

Eigen::RowVector3d weighted_centroid(const Eigen::MatrixXd& v, const Eigen::VectorXd& weights) {
  return (weights.transpose() * v) / weights.sum();
}

void check(const TriangleMesh& mesh, const EigenSystem& es, int k) {
  if (es.vertex_count() != mesh.vertex_count())
    throw InvalidParam("eigensystem has " + std::to_string(es.vertex_count()) +
                       " vertices, mesh has " + std::to_string(mesh.vertex_count()));
  if (k < 1 || k > es.count())
    throw InvalidParam("reconstruction needs 1 <= k <= " + std::to_string(es.count()) + ", got " +
                       std::to_string(k));
}

/// Reconstructs from the first k eigenfunctions. With a constant first mode
/// the constant term is the centroid itself, so it is added directly.
class Projector {
 public:
  Projector(const Eigen::MatrixXd& v, const EigenSystem& es) : es_(es) {
    centroid_ = weighted_centroid(v, es.mass);
    const Eigen::MatrixXd centered =
        es.constant_first ? Eigen::MatrixXd(v.rowwise() - centroid_) : v;
    coefficients_ = es.eigenfunctions.transpose() * es.mass.asDiagonal() * centered;
  }

  Eigen::MatrixXd reconstruct(int k) const {
    const Eigen::Index m = es_.vertex_count();
    if (es_.constant_first) {
      Eigen::MatrixXd out = centroid_.replicate(m, 1);
      if (k > 1)
        out += es_.eigenfunctions.middleCols(1, k - 1) * coefficients_.middleRows(1, k - 1);
      return out;
    }
    return es_.eigenfunctions.leftCols(k) * coefficients_.topRows(k);
  }

  const Eigen::MatrixXd& coefficients() const noexcept { return coefficients_; }

 private:
  const EigenSystem& es_;
  Eigen::RowVector3d centroid_;
  Eigen::MatrixXd coefficients_;
};

}  // namespace

ReconstructedMesh spectral_reconstruct(const TriangleMesh& mesh, const EigenSystem& es, int k) {
  check(mesh, es, k);
  const Projector projector(positions_of(mesh), es);
  return {projector.reconstruct(k), mesh.triangles(), k};
}

void write_off(const ReconstructedMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "OFF\n" << mesh.positions.rows() << ' ' << mesh.triangles.size() << " 0\n";
  char buf[128];
  for (Eigen::Index i = 0; i < mesh.positions.rows(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g %.12g %.12g\n", mesh.positions(i, 0),
                  mesh.positions(i, 1), mesh.positions(i, 2));
    out << buf;
  }
  for (const Triangle& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

ReconstructionReport nmse_curve(const TriangleMesh& mesh, const EigenSystem& es,
                                const std::vector<int>& ks, bool area_weighted) {
  for (int k : ks) check(mesh, es, k);
  const Eigen::MatrixXd v = positions_of(mesh);
  const Projector projector(v, es);
  const Eigen::VectorXd weights =
      area_weighted ? es.mass : Eigen::VectorXd::Ones(mesh.vertex_count());

  const Eigen::RowVector3d centre = weighted_centroid(v, es.mass);
  const Eigen::MatrixXd spread = v.rowwise() - centre;
  const double denominator = weights.dot(spread.rowwise().squaredNorm());
  if (!(denominator > 0.0)) throw NumericalError("mesh has zero spread about its centroid");

  ReconstructionReport report;
  report.ks = ks;
  if (area_weighted && es.constant_first) {
    // A-orthogonal split: the error with k modes is the error with all K
    // modes plus the energy of modes k+1..K. Accumulated from the top, so the
    // curve is nonincreasing in floating point as well.
    const int K = es.count();
    std::vector<double> tail(static_cast<std::size_t>(K) + 1, 0.0);
    tail[K] = weights.dot((v - projector.reconstruct(K)).rowwise().squaredNorm());
    for (int k = K - 1; k >= 1; --k) tail[k] = tail[k + 1] + projector.coefficients().row(k).squaredNorm();
    for (int k : ks) report.nmse.push_back(tail[k] / tail[1]);
    return report;
  }
  for (int k : ks) {
    const Eigen::MatrixXd error = v - projector.reconstruct(k);
    report.nmse.push_back(weights.dot(error.rowwise().squaredNorm()) / denominator);
  }
  return report;
}

void write_nmse_csv(const ReconstructionReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "k,nmse\n";
  for (std::size_t i = 0; i < report.ks.size(); ++i)
    out << report.ks[i] << ',' << csv::exact(report.nmse[i]) << '\n';
}

}  // namespace sgw

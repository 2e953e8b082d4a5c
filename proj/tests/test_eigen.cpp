#include "support.hpp"

#include "sgw/eigen_solver.hpp"
#include "sgw/error.hpp"
#include "sgw/laplacian.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <cstring>

using namespace sgw;

namespace {

/// Reference: dense generalized eigendecomposition of (W, A).
Eigen::VectorXd dense_oracle(const LaplacianPair& lap) {
  const Eigen::MatrixXd w(lap.stiffness);
  const Eigen::MatrixXd a = lap.mass.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(w, a);
  return solver.eigenvalues();
}

bool same_bytes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("k = 1 gives the constant null vector") {
  const TriangleMesh mesh = make_synthetic(SyntheticKind::bumpy_sphere, 2, {{1, 1, 1}, 0.1}, 3);
  const LaplacianPair lap = cotangent_weights(mesh);
  const EigenSystem es = solve_smallest(lap, 1);
  REQUIRE(es.count() == 1);
  CHECK(std::abs(es.eigenvalues[0]) < 1e-12);
  const double expected = 1.0 / std::sqrt(lap.mass.sum());
  CHECK((es.eigenfunctions.col(0).array() - expected).abs().maxCoeff() < 1e-12);
  CHECK(es.constant_first);
}

TEST_CASE("unit icosphere spectrum approximates l(l+1)") {
  const LaplacianPair lap = cotangent_weights(make_synthetic(SyntheticKind::unit_sphere, 3));
  for (EigenMethod method : {EigenMethod::sparse, EigenMethod::dense}) {
    const EigenSystem es = solve_smallest(lap, 10, {method});
    CHECK(es.eigenvalues[0] < 1e-8 * es.eigenvalues[9]);
    for (int l = 1; l <= 3; ++l) CHECK(std::abs(es.eigenvalues[l] - 2.0) / 2.0 < 0.05);
    for (int l = 4; l <= 8; ++l) CHECK(std::abs(es.eigenvalues[l] - 6.0) / 6.0 < 0.05);
  }
}

TEST_CASE("tetrahedron k = 4 matches the dense oracle") {
  const LaplacianPair lap = cotangent_weights(sgw::test::tetrahedron());
  const EigenSystem es = solve_smallest(lap, 4);
  const Eigen::VectorXd oracle = dense_oracle(lap);
  for (int l = 0; l < 4; ++l) CHECK(std::abs(es.eigenvalues[l] - oracle[l]) < 1e-9);
}

TEST_CASE("sparse path agrees with the dense oracle on meshes up to 600 vertices") {
  const std::vector<TriangleMesh> meshes = {
      make_synthetic(SyntheticKind::unit_sphere, 2),
      make_synthetic(SyntheticKind::bumpy_sphere, 2, {{1, 1, 1}, 0.2}, 1),
      make_synthetic(SyntheticKind::ellipsoid, 2, {{1.5, 1.0, 0.7}, 0.05}, 2),
      sgw::test::planar_grid(15),
      make_synthetic(SyntheticKind::bumpy_sphere, 2, {{1, 1, 1}, 0.35}, 77)};
  for (const TriangleMesh& mesh : meshes) {
    REQUIRE(mesh.vertex_count() <= 600);
    const LaplacianPair lap = cotangent_weights(mesh);
    const Eigen::VectorXd oracle = dense_oracle(lap);
    const EigenSystem es = solve_smallest(lap, 31, {EigenMethod::sparse});
    for (int l = 0; l < 31; ++l)
      CHECK(std::abs(es.eigenvalues[l] - oracle[l]) <= 1e-9 + 1e-9 * std::abs(oracle[l]));
    CHECK(orthonormality_defect(es) < 1e-8);
    CHECK(max_relative_residual(lap, es) < 1e-8);
  }
}

TEST_CASE("eigensystem invariants") {
  const LaplacianPair lap =
      cotangent_weights(make_synthetic(SyntheticKind::bumpy_sphere, 3, {{1, 1, 1}, 0.1}, 12));
  const EigenSystem es = solve_smallest(lap, 31);
  CHECK(es.eigenvalues[0] < 1e-8 * es.eigenvalues[30]);
  CHECK(es.eigenvalues[1] > 0.0);
  for (int l = 1; l < 31; ++l) CHECK(es.eigenvalues[l] >= es.eigenvalues[l - 1]);
  CHECK(orthonormality_defect(es) < 1e-8);
  CHECK(max_relative_residual(lap, es) < 1e-8);
  // Sign convention: largest-magnitude entry positive.
  for (int l = 0; l < 31; ++l) {
    Eigen::Index at = 0;
    es.eigenfunctions.col(l).cwiseAbs().maxCoeff(&at);
    CHECK(es.eigenfunctions(at, l) > 0.0);
  }
}

TEST_CASE("identical inputs give identical bytes") {
  const LaplacianPair lap =
      cotangent_weights(make_synthetic(SyntheticKind::bumpy_sphere, 3, {{1, 1, 1}, 0.1}, 4));
  const EigenSystem a = solve_smallest(lap, 20, {EigenMethod::sparse});
  const EigenSystem b = solve_smallest(lap, 20, {EigenMethod::sparse});
  CHECK(same_bytes(a.eigenvalues, b.eigenvalues));
  CHECK(same_bytes(a.eigenfunctions, b.eigenfunctions));
}

TEST_CASE("eigenvalues are rigid-motion invariant and scale as 1/s^2") {
  SplitMix64 rng(99);
  const TriangleMesh mesh = make_synthetic(SyntheticKind::ellipsoid, 3, {{1.3, 1.0, 0.9}, 0.05}, 6);
  const EigenSystem base = solve_smallest(cotangent_weights(mesh), 15);
  for (int trial = 0; trial < 3; ++trial) {
    const TriangleMesh moved =
        rigid_transform(mesh, sgw::test::random_rotation(rng), sgw::test::random_vector(rng, 3));
    const EigenSystem es = solve_smallest(cotangent_weights(moved), 15);
    for (int l = 1; l < 15; ++l)
      CHECK(std::abs(es.eigenvalues[l] - base.eigenvalues[l]) < 1e-10 * base.eigenvalues[l]);
  }
  const double s = 2.5;
  const EigenSystem scaled = solve_smallest(cotangent_weights(scale_mesh(mesh, s)), 15);
  for (int l = 1; l < 15; ++l)
    CHECK(std::abs(scaled.eigenvalues[l] * s * s - base.eigenvalues[l]) < 1e-8 * base.eigenvalues[l]);
}

TEST_CASE("open meshes get Neumann eigenvalues") {
  // Unit square: pi^2 (i^2 + j^2).
  const LaplacianPair lap = cotangent_weights(sgw::test::planar_grid(25));
  const EigenSystem es = solve_smallest(lap, 4);
  const double pi2 = M_PI * M_PI;
  CHECK(std::abs(es.eigenvalues[1] - pi2) / pi2 < 0.03);
  CHECK(std::abs(es.eigenvalues[2] - pi2) / pi2 < 0.03);
  CHECK(std::abs(es.eigenvalues[3] - 2 * pi2) / (2 * pi2) < 0.03);
}

TEST_CASE("spectrum_bounds") {
  EigenSystem es;
  es.eigenvalues = Eigen::Vector4d(0, 1, 4, 20);
  es.eigenfunctions = Eigen::MatrixXd::Zero(4, 4);
  es.mass = Eigen::VectorXd::Ones(4);
  const auto [lo, hi] = spectrum_bounds(es);
  CHECK(lo == 1.0);
  CHECK(hi == 20.0);
  CHECK_THROWS_AS(spectrum_bounds(es.truncated(1)), InvalidParam);

  const EigenSystem sphere = solve_smallest(cotangent_weights(make_synthetic(SyntheticKind::unit_sphere, 3)), 31);
  const auto [slo, shi] = spectrum_bounds(sphere);
  CHECK(shi == sphere.eigenvalues[30]);
  CHECK(slo == sphere.eigenvalues[30] / 20.0);
}

TEST_CASE("argument validation") {
  LaplacianPair lap = cotangent_weights(sgw::test::tetrahedron());
  CHECK_THROWS_AS(solve_smallest(lap, 0), InvalidParam);
  CHECK_THROWS_AS(solve_smallest(lap, 5), InvalidParam);
  lap.mass[2] = 0.0;
  CHECK_THROWS_AS(solve_smallest(lap, 2), DegenerateMass);
  const EigenSystem es = solve_smallest(cotangent_weights(sgw::test::tetrahedron()), 3);
  CHECK_THROWS_AS(es.truncated(4), InvalidParam);
  CHECK(es.truncated(2).count() == 2);
}

TEST_CASE("spectrum cache round trip") {
  const auto dir = sgw::test::temp_dir("eig-cache");
  const TriangleMesh mesh = make_synthetic(SyntheticKind::bumpy_sphere, 2, {{1, 1, 1}, 0.1}, 5);
  const LaplacianPair lap = cotangent_weights(mesh);
  const EigenSystem es = solve_smallest(lap, 12);
  save_spectrum(dir / "s.eig", {mesh.content_hash(), AreaScheme::mixed_voronoi, es});
  const auto loaded = load_spectrum(dir / "s.eig");
  REQUIRE(loaded);
  CHECK(loaded->mesh_hash == mesh.content_hash());
  CHECK(loaded->system.constant_first == es.constant_first);
  CHECK(same_bytes(loaded->system.eigenvalues, es.eigenvalues));
  CHECK(same_bytes(loaded->system.eigenfunctions, es.eigenfunctions));
  CHECK(same_bytes(loaded->system.mass, es.mass));

  CHECK_FALSE(load_spectrum(dir / "missing.eig"));
  sgw::test::write_file(dir / "bad.eig", "not a spectrum");
  CHECK_THROWS_AS(load_spectrum(dir / "bad.eig"), IoError);
  // Truncated file.
  const std::string bytes = sgw::test::read_file(dir / "s.eig");
  sgw::test::write_file(dir / "short.eig", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_spectrum(dir / "short.eig"), IoError);
}

#include "oracles.hpp"
#include "support.hpp"

#include "sgw/eigen_solver.hpp"
#include "sgw/error.hpp"
#include "sgw/laplacian.hpp"
#include "sgw/sgws.hpp"

#include <doctest.h>

#include <fstream>

using namespace sgw;
using sgw::test::brute_force_signature;
using sgw::test::toy_system;

namespace {

EigenSystem sphere_system(int k) {
  return solve_smallest(cotangent_weights(make_synthetic(SyntheticKind::unit_sphere, 3)), k);
}

}  // namespace

TEST_CASE("mexican hat kernel values") {
  CHECK(mexican_hat(0.0) == 0.0);
  CHECK(mexican_hat(1.0) == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(mexican_hat(1.0) == std::exp(-1.0));
  CHECK(mexican_hat(5.0) == doctest::Approx(0.033690).epsilon(1e-5));
  CHECK(std::abs(mexican_hat(5.0) - 5.0 * std::exp(-5.0)) < 1e-16);
  // The maximum over a fine grid sits at x = 1.
  for (KernelKind kind : {KernelKind::mexican_hat, KernelKind::mexican_hat_squared}) {
    double best = 0.0, at = 0.0;
    for (int i = 0; i <= 100000; ++i) {
      const double x = i * 1e-4;
      if (evaluate_kernel(kind, x) > best) best = evaluate_kernel(kind, x), at = x;
    }
    CHECK(at == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(kernel_peak(kind) == doctest::Approx(best).epsilon(1e-10));
    CHECK(kernel_peak(kind) >= best);
  }
  CHECK(evaluate_kernel(KernelKind::mexican_hat_squared, 2.0) == doctest::Approx(4.0 * std::exp(-4.0)));
  CHECK(parse_kernel(kernel_id(KernelKind::mexican_hat_squared)) == KernelKind::mexican_hat_squared);
  CHECK_FALSE(parse_kernel("morlet"));
}

TEST_CASE("scaling kernel values") {
  const KernelConfig cfg = KernelConfig::with_bounds(1.0, 20.0, 3);
  CHECK(cfg.gamma == std::exp(-1.0));
  CHECK(scaling_kernel(0.0, cfg) == std::exp(-1.0));
  CHECK(scaling_kernel(0.6, cfg) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(scaling_kernel(1.2, cfg) == doctest::Approx(4.14e-8).epsilon(1e-3));
  CHECK(std::abs(scaling_kernel(1.2, cfg) - std::exp(-1.0) * std::exp(-16.0)) < 1e-20);
}

TEST_CASE("wavelet scales") {
  const auto two = wavelet_scales(2, 1.0, 20.0);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == 2.0);
  CHECK(two[1] == 0.1);
  const auto three = wavelet_scales(3, 1.0, 20.0);
  REQUIRE(three.size() == 3);
  CHECK(three[0] == 2.0);
  CHECK(three[1] == doctest::Approx(std::sqrt(2.0 * 0.1)).epsilon(1e-14));
  CHECK(three[1] == doctest::Approx(0.4472).epsilon(1e-4));
  CHECK(three[2] == 0.1);
  CHECK(wavelet_scales(1, 1.0, 20.0) == std::vector<double>{2.0});
  for (int L = 2; L <= 30; ++L) {
    const auto t = wavelet_scales(L, 0.37, 7.4);
    for (int k = 1; k < L; ++k) CHECK(t[k] < t[k - 1]);
    // Log-equispaced: constant ratio.
    for (int k = 2; k < L; ++k) CHECK(t[k] / t[k - 1] == doctest::Approx(t[1] / t[0]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(wavelet_scales(0, 1.0, 2.0), InvalidParam);
  CHECK_THROWS_AS(wavelet_scales(2, 2.0, 1.0), InvalidParam);
  CHECK_THROWS_AS(wavelet_scales(2, 0.0, 1.0), InvalidParam);
}

TEST_CASE("signature length formula") {
  for (int R = 1; R <= 30; ++R) CHECK(signature_length(R) == (R + 1) * (R + 2) / 2 - 1);
  CHECK(signature_length(1) == 2);
  CHECK(signature_length(2) == 5);
  CHECK(signature_length(5) == 20);
  CHECK(signature_length(30) == 495);
  CHECK_THROWS_AS(signature_length(0), InvalidParam);
}

TEST_CASE("toy system signature matches hand summation") {
  const EigenSystem es = toy_system();
  const KernelConfig cfg = KernelConfig::with_bounds(0.2, 4.0, 1);
  for (int j = 0; j < 3; ++j) {
    const Eigen::VectorXd s = vertex_signature(es, cfg, j);
    REQUIRE(s.size() == 2);
    // t_1 = 2 / 0.2 = 10; g(0) = 0, g(40) = 40 e^-40.
    const double phi2 = es.eigenfunctions(j, 1) * es.eigenfunctions(j, 1);
    const double phi1 = 1.0 / 3.0;
    const double w = 40.0 * std::exp(-40.0) * phi2;
    const double gamma = std::exp(-1.0);
    const double scaling = gamma * phi1 + gamma * std::exp(-std::pow(4.0 / 0.12, 4)) * phi2;
    CHECK(std::abs(s[0] - w) < 1e-12);
    CHECK(std::abs(s[1] - scaling) < 1e-12);
    CHECK((s - brute_force_signature(es, 0.2, 4.0, 1, j)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("signature layout on a real spectrum matches brute force") {
  const TriangleMesh mesh = make_synthetic(SyntheticKind::bumpy_sphere, 2, {{1, 1, 1}, 0.15}, 3);
  const EigenSystem es = solve_smallest(cotangent_weights(mesh), 20);
  const auto [lmin, lmax] = spectrum_bounds(es);
  for (int R : {1, 2, 4, 7}) {
    const KernelConfig cfg = KernelConfig::from_spectrum(es, R);
    CHECK(cfg.lambda_max == lmax);
    CHECK(cfg.lambda_min == lmin);
    const SignatureMatrix sig = signature_matrix(es, cfg);
    CHECK(sig.length() == signature_length(R));
    CHECK(sig.vertex_count() == mesh.vertex_count());
    for (int j : {0, 17, 100, mesh.vertex_count() - 1}) {
      const Eigen::VectorXd oracle = brute_force_signature(es, lmin, lmax, R, j);
      CHECK((sig.values.col(j) - oracle).cwiseAbs().maxCoeff() <= 1e-12 * oracle.cwiseAbs().maxCoeff());
    }
  }
  SUBCASE("area factor can be switched off") {
    const KernelConfig cfg = KernelConfig::from_spectrum(es, 3, KernelKind::mexican_hat, false);
    const Eigen::VectorXd s = vertex_signature(es, cfg, 5);
    const Eigen::VectorXd oracle = brute_force_signature(es, lmin, lmax, 3, 5, false);
    CHECK((s - oracle).cwiseAbs().maxCoeff() <= 1e-12 * oracle.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("signature matrix columns equal per-vertex signatures bitwise") {
  const EigenSystem es = sphere_system(15);
  const KernelConfig cfg = KernelConfig::from_spectrum(es, 5);
  const SignatureMatrix sig = signature_matrix(es, cfg);
  for (int j = 0; j < es.vertex_count(); j += 37) CHECK(sig.values.col(j) == vertex_signature(es, cfg, j));
  CHECK((sig.values.array() >= 0.0).all());
  CHECK(sig.values.allFinite());
  CHECK(sig.length() == 20);
  CHECK(signature_matrix(es, KernelConfig::from_spectrum(es, 30)).length() == 495);
}

TEST_CASE("signatures are invariant under rotations within a degenerate eigenspace") {
  const EigenSystem es = sphere_system(10);
  const KernelConfig cfg = KernelConfig::from_spectrum(es, 6);
  const SignatureMatrix base = signature_matrix(es, cfg);
  SplitMix64 rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    EigenSystem rotated = es;
    // The l = 1 triplet is columns 1..3; the l = 2 quintuple 4..8.
    rotated.eigenfunctions.middleCols(1, 3) = es.eigenfunctions.middleCols(1, 3) * sgw::test::random_rotation(rng);
    const SignatureMatrix sig = signature_matrix(rotated, cfg);
    worst = std::max(worst, (sig.values - base.values).cwiseAbs().maxCoeff());
  }
  // The triplet eigenvalues agree to ~1e-14 on the icosphere, so rotation is
  // a symmetry of the sums up to that spread.
  CHECK(worst < 1e-10);
}

TEST_CASE("signatures are invariant under rigid motions") {
  SplitMix64 rng(8);
  const TriangleMesh mesh = make_synthetic(SyntheticKind::bumpy_sphere, 3, {{1, 1, 1}, 0.1}, 17);
  const EigenSystem es = solve_smallest(cotangent_weights(mesh), 31);
  const SignatureMatrix base = signature_matrix(es, KernelConfig::from_spectrum(es, 10));
  for (int trial = 0; trial < 3; ++trial) {
    const TriangleMesh moved =
        rigid_transform(mesh, sgw::test::random_rotation(rng), sgw::test::random_vector(rng, 4));
    const EigenSystem mes = solve_smallest(cotangent_weights(moved), 31);
    const SignatureMatrix sig = signature_matrix(mes, KernelConfig::from_spectrum(mes, 10));
    CHECK((sig.values - base.values).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("kernel config validation") {
  CHECK_THROWS_AS(KernelConfig::with_bounds(0.0, 1.0, 3), InvalidParam);
  CHECK_THROWS_AS(KernelConfig::with_bounds(2.0, 1.0, 3), InvalidParam);
  CHECK_THROWS_AS(KernelConfig::with_bounds(0.1, 1.0, 0), InvalidParam);
  const EigenSystem es = toy_system();
  CHECK_THROWS(vertex_signature(es, KernelConfig::with_bounds(0.2, 4.0, 1), 3));
}

TEST_CASE("signature CSV and cache") {
  const auto dir = sgw::test::temp_dir("sig");
  const EigenSystem es = sphere_system(12);
  const SignatureMatrix sig = signature_matrix(es, KernelConfig::from_spectrum(es, 3));

  write_signature_csv(sig, dir / "sig.csv");
  std::ifstream in(dir / "sig.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == es.vertex_count() - 1);
  }
  CHECK(rows == 9);

  const SignatureKey key{0xabcdef, 12, 3, "mexican_hat", true};
  save_signature(dir / "sig.bin", key, sig);
  const auto loaded = load_signature(dir / "sig.bin", key);
  REQUIRE(loaded);
  CHECK(loaded->values == sig.values);
  CHECK(loaded->resolution == 3);
  SignatureKey other = key;
  other.k = 13;
  CHECK_FALSE(load_signature(dir / "sig.bin", other));
  CHECK_FALSE(load_signature(dir / "none.bin", key));
}

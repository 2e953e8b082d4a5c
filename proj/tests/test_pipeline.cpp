#include "support.hpp"

#include "sgw/error.hpp"
#include "sgw/pipeline.hpp"

#include <doctest.h>

using namespace sgw;
namespace fs = std::filesystem;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.k = 12;
  cfg.resolution = 4;
  cfg.pca_dims = 5;
  cfg.n_permutations = 199;
  cfg.seed = 3;
  return cfg;
}

/// Two strata ("lunate" left, "scaphoid" right) of 4 + 4 shapes.
DatasetManifest two_strata(const fs::path& dir) {
  SyntheticDatasetSpec spec;
  spec.per_group = 4;
  spec.subdivisions = 2;
  spec.seed = 1;
  spec.bone = "lunate";
  DatasetManifest a = write_synthetic_dataset(dir / "a", spec);
  spec.seed = 2;
  spec.bone = "scaphoid";
  spec.side = Side::right;
  const DatasetManifest b = write_synthetic_dataset(dir / "b", spec);
  a.entries.insert(a.entries.end(), b.entries.begin(), b.entries.end());
  return a;
}

std::string manifest_text(const DatasetManifest& m) {
  std::string out = "path,subject,group,bone,side\n";
  for (const ManifestEntry& e : m.entries)
    out += e.path.string() + "," + e.subject + "," + e.group + "," + e.bone + "," + to_string(e.side) + "\n";
  return out;
}

}  // namespace

TEST_CASE("manifest parsing and validation") {
  const fs::path dir = sgw::test::temp_dir("manifest");
  const TriangleMesh sphere = make_synthetic(SyntheticKind::unit_sphere, 1);
  write_off(sphere, dir / "a.off");
  write_off(sphere, dir / "b.off");

  sgw::test::write_file(dir / "ok.csv", "path,subject,group,bone,side\na.off,s1,m,lunate,left\nb.off,s1,m,lunate,Right\n");
  const DatasetManifest m = load_manifest(dir / "ok.csv");
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].path == (fs::absolute(dir) / "a.off").lexically_normal());
  CHECK(m.entries[1].side == Side::right);

  sgw::test::write_file(dir / "empty.csv", "path,subject,group,bone,side\n");
  CHECK_THROWS_AS(load_manifest(dir / "empty.csv"), ValidationError);
  sgw::test::write_file(dir / "header.csv", "file,subject,group,bone,side\na.off,s1,m,lunate,left\n");
  CHECK_THROWS_AS(load_manifest(dir / "header.csv"), ParseError);
  sgw::test::write_file(dir / "dup.csv", "path,subject,group,bone,side\na.off,s1,m,lunate,left\nb.off,s1,f,lunate,left\n");
  CHECK_THROWS_AS(load_manifest(dir / "dup.csv"), ValidationError);
  sgw::test::write_file(dir / "missing.csv", "path,subject,group,bone,side\nzzz.off,s1,m,lunate,left\n");
  CHECK_THROWS_AS(load_manifest(dir / "missing.csv"), ValidationError);
  sgw::test::write_file(dir / "side.csv", "path,subject,group,bone,side\na.off,s1,m,lunate,middle\n");
  CHECK_THROWS_AS(load_manifest(dir / "side.csv"), ParseError);
  CHECK_THROWS_AS(load_manifest(dir / "nothere.csv"), IoError);
}

TEST_CASE("strata are compared independently and in order") {
  const fs::path dir = sgw::test::temp_dir("strata");
  const DatasetManifest both = two_strata(dir);
  Pipeline pipeline(small_config());
  const auto results = pipeline.run_group_comparison(both);
  REQUIRE(results.size() == 2);
  CHECK(results[0].bone == "lunate");
  CHECK(results[0].side == Side::left);
  CHECK(results[1].bone == "scaphoid");
  CHECK(results[1].side == Side::right);
  for (const auto& r : results) {
    INFO(r.error);
    REQUIRE(r.comparison);
    CHECK(r.error.empty());
    CHECK(r.subjects.size() == 8);
    CHECK(r.comparison->first_size == 4);
    CHECK(r.comparison->pca_dims <= 5);
    CHECK(r.comparison->permutation_p >= 1.0 / 200.0);
  }
  CHECK(pipeline.counters().eigensolves == 16);

  // Dropping a stratum leaves the other one untouched.
  DatasetManifest only_second = both;
  only_second.entries.erase(only_second.entries.begin(), only_second.entries.begin() + 8);
  Pipeline fresh(small_config());
  const auto single = fresh.run_group_comparison(only_second);
  REQUIRE(single.size() == 1);
  CHECK(single[0].comparison->wilks_lambda == results[1].comparison->wilks_lambda);
  CHECK(single[0].comparison->manova_p == results[1].comparison->manova_p);
  CHECK(single[0].comparison->permutation_p == results[1].comparison->permutation_p);
}

TEST_CASE("a corrupt mesh fails only its stratum") {
  const fs::path dir = sgw::test::temp_dir("corrupt");
  DatasetManifest both = two_strata(dir);
  sgw::test::write_file(both.entries[2].path, "OFF\n3 1 0\n0 0 0\n1 0 0\n");
  Pipeline pipeline(small_config());
  const auto results = pipeline.run_group_comparison(both);
  REQUIRE(results.size() == 2);
  CHECK_FALSE(results[0].comparison);
  CHECK(results[0].error.find("ParseError") != std::string::npos);
  CHECK(results[0].error.find(both.entries[2].subject) != std::string::npos);
  CHECK(results[1].comparison);
}

TEST_CASE("a stratum with one group is skipped") {
  const fs::path dir = sgw::test::temp_dir("onegroup");
  DatasetManifest m = two_strata(dir);
  for (auto& e : m.entries) e.group = "same";
  Pipeline pipeline(small_config());
  const auto results = pipeline.run_group_comparison(m);
  for (const auto& r : results) {
    CHECK_FALSE(r.comparison);
    CHECK(r.error.rfind("skipped", 0) == 0);
  }
}

TEST_CASE("warm cache equals cold cache bitwise") {
  const fs::path dir = sgw::test::temp_dir("cache");
  const DatasetManifest m = two_strata(dir);
  RunConfig cfg = small_config();
  cfg.cache_dir = dir / "cache";

  Pipeline cold(cfg);
  const auto first = cold.run_group_comparison(m);
  write_report_json(first, cfg, dir / "cold.json");
  write_report_csv(first, dir / "cold.csv");
  CHECK(cold.counters().eigensolves == 16);

  Pipeline warm(cfg);
  const auto second = warm.run_group_comparison(m);
  write_report_json(second, cfg, dir / "warm.json");
  write_report_csv(second, dir / "warm.csv");
  CHECK(warm.counters().eigensolves == 0);
  CHECK(warm.counters().descriptor_cache_hits == 16);
  CHECK(sgw::test::read_file(dir / "cold.json") == sgw::test::read_file(dir / "warm.json"));
  CHECK(sgw::test::read_file(dir / "cold.csv") == sgw::test::read_file(dir / "warm.csv"));

  // A run with a different R reuses the stored spectra.
  RunConfig other = cfg;
  other.resolution = 2;
  Pipeline reuse(other);
  reuse.run_group_comparison(m);
  CHECK(reuse.counters().eigensolves == 0);
  CHECK(reuse.counters().spectrum_cache_hits == 16);

  // Smaller k is served by truncating a stored larger solve.
  RunConfig smaller = cfg;
  smaller.k = 8;
  Pipeline truncated(smaller);
  truncated.run_group_comparison(m);
  CHECK(truncated.counters().eigensolves == 0);
}

TEST_CASE("threaded runs match sequential runs") {
  const fs::path dir = sgw::test::temp_dir("jobs");
  const DatasetManifest m = two_strata(dir);
  RunConfig cfg = small_config();
  Pipeline one(cfg);
  cfg.jobs = 3;
  Pipeline three(cfg);
  const auto a = one.run_group_comparison(m);
  const auto b = three.run_group_comparison(m);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].comparison->wilks_lambda == b[i].comparison->wilks_lambda);
    CHECK(a[i].comparison->permutation_p == b[i].comparison->permutation_p);
  }
}

TEST_CASE("parameter sweep grid") {
  const fs::path dir = sgw::test::temp_dir("sweep");
  SyntheticDatasetSpec spec;
  spec.per_group = 4;
  spec.subdivisions = 2;
  const DatasetManifest m = write_synthetic_dataset(dir, spec);
  Pipeline pipeline(small_config());
  const auto rows = pipeline.parameter_sweep(m, {1, 5, 30}, {10, 31});
  REQUIRE(rows.size() == 6);
  int complete = 0;
  for (const SweepRow& r : rows) complete += r.result.comparison.has_value();
  CHECK(complete == 6);
  CHECK(rows[0].resolution == 1);
  CHECK(rows[0].k == 10);
  CHECK(rows[1].k == 31);
  CHECK(rows[5].resolution == 30);
  // One solve per shape at k = 10 and one at k = 31.
  CHECK(pipeline.counters().eigensolves == 16);
  CHECK(pipeline.config().resolution == 4);
  write_sweep_csv(rows, dir / "sweep.csv");
  CHECK(sgw::test::read_file(dir / "sweep.csv").rfind("R,k,bone,side,", 0) == 0);
  CHECK_THROWS_AS(pipeline.parameter_sweep(m, {}, {10}), InvalidParam);
}

TEST_CASE("reports and summary") {
  const fs::path dir = sgw::test::temp_dir("report");
  SyntheticDatasetSpec spec;
  spec.per_group = 5;
  spec.subdivisions = 2;
  const DatasetManifest m = write_synthetic_dataset(dir, spec);
  CHECK(manifest_text(load_manifest(dir / "manifest.csv")) == manifest_text(m));
  Pipeline pipeline(small_config());
  const auto results = pipeline.run_group_comparison(m);
  const std::string summary = format_summary(results);
  CHECK(summary.find("synthetic") != std::string::npos);
  if (results[0].manova_significant()) CHECK(summary.find('*') != std::string::npos);
  write_report_json(results, pipeline.config(), dir / "r.json");
  const std::string json = sgw::test::read_file(dir / "r.json");
  CHECK(json.find("\"wilks_lambda\"") != std::string::npos);
  CHECK(json.find("\"permutation_p\"") != std::string::npos);
  CHECK(describe(pipeline.config()).find("k = 12") != std::string::npos);
  CHECK(effective_pca_dims(18, 495, 20) == 18);
  CHECK(effective_pca_dims(18, 2, 20) == 2);
  CHECK(effective_pca_dims(18, 495, 8) == 6);
}

TEST_CASE("default configuration") {
  const RunConfig cfg;
  CHECK(cfg.k == 31);
  CHECK(cfg.resolution == 30);
  CHECK(cfg.pca_dims == 18);
  CHECK(cfg.n_permutations == 1000);
  CHECK(cfg.kernel == KernelKind::mexican_hat);
  CHECK(cfg.area_scheme == AreaScheme::mixed_voronoi);
  CHECK_THROWS_AS(Pipeline(RunConfig{.k = 1}), InvalidParam);
}

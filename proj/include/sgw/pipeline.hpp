#pragma once

#include "sgw/eigen_solver.hpp"
#include "sgw/gsgw.hpp"
#include "sgw/laplacian.hpp"
#include "sgw/mesh.hpp"
#include "sgw/sgws.hpp"
#include "sgw/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace sgw {

enum class Side { left, right };

const char* to_string(Side side) noexcept;
std::optional<Side> parse_side(const std::string& text);

struct ManifestEntry {
  std::filesystem::path path;
  std::string subject;
  std::string group;
  std::string bone;
  Side side = Side::left;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
};

/// Reads a CSV manifest with header `path,subject,group,bone,side`. Relative
/// paths resolve against the manifest's directory. Throws ParseError or
/// ValidationError (empty manifest, duplicate (subject, bone, side), missing
/// file, unknown side).
DatasetManifest load_manifest(const std::filesystem::path& path);
void validate(const DatasetManifest& manifest);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct RunConfig {
  int k = 31;
  int resolution = 30;
  int pca_dims = 18;
  int n_permutations = 1000;
  std::uint64_t seed = 0;
  KernelKind kernel = KernelKind::mexican_hat;
  AreaScheme area_scheme = AreaScheme::mixed_voronoi;
  bool area_factor = true;
  bool normalize_gsgw = false;
  std::optional<std::filesystem::path> cache_dir;
  int jobs = 1;
};

/// Human-readable one-line-per-setting dump.
std::string describe(const RunConfig& cfg);

struct StratumResult {
  std::string bone;
  Side side = Side::left;
  std::vector<std::string> subjects;
  std::optional<GroupComparison> comparison;
  /// Set when the stratum failed or was skipped.
  std::string error;

  bool manova_significant() const {
    return comparison && comparison->manova_p < kSignificanceLevel;
  }
  bool permutation_significant() const {
    return comparison && comparison->permutation_p < kSignificanceLevel;
  }
};

struct PipelineCounters {
  int eigensolves = 0;
  int spectrum_cache_hits = 0;
  int descriptor_cache_hits = 0;
  int meshes_loaded = 0;
};

struct SweepRow {
  int resolution = 0;
  int k = 0;
  StratumResult result;
};

/// Runs the shape-population analysis. Keeps spectra and descriptors in
/// memory across calls and, when `cache_dir` is set, in content-addressed
/// files (written via temp file + rename).
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg);

  const RunConfig& config() const noexcept { return cfg_; }
  const PipelineCounters& counters() const noexcept { return counters_; }

  /// GSGW descriptor of one mesh under the current config.
  GsgwVector descriptor(const TriangleMesh& mesh);
  EigenSystem spectrum(const TriangleMesh& mesh, const LaplacianPair& lap, int k);

  /// One comparison per (bone, side) stratum, ordered by bone then side.
  /// Failures are recorded per stratum.
  std::vector<StratumResult> run_group_comparison(const DatasetManifest& manifest);

  /// run_group_comparison for every (R, k) pair, R-major.
  std::vector<SweepRow> parameter_sweep(const DatasetManifest& manifest,
                                        const std::vector<int>& resolutions,
                                        const std::vector<int>& ks);

 private:
  struct ShapeOutcome {
    std::optional<Eigen::VectorXd> descriptor;
    std::string error;
  };

  ShapeOutcome process_shape(const std::filesystem::path& path);
  const TriangleMesh& mesh_for(const std::filesystem::path& path);
  std::filesystem::path spectrum_file(std::uint64_t hash, int k) const;
  std::string descriptor_name(std::uint64_t hash) const;
  std::filesystem::path descriptor_file(std::uint64_t hash) const;

  RunConfig cfg_;
  PipelineCounters counters_;
  std::mutex mutex_;
  std::map<std::string, TriangleMesh> meshes_;
  /// (mesh hash, k) -> spectrum
  std::map<std::pair<std::uint64_t, int>, EigenSystem> spectra_;
  std::map<std::string, Eigen::VectorXd> descriptors_;
};

/// Effective PCA dimension for a stratum: min(requested, p, n - 2).
int effective_pca_dims(int requested, int features, int rows);

void write_report_csv(const std::vector<StratumResult>& results, const std::filesystem::path& path);
void write_report_json(const std::vector<StratumResult>& results, const RunConfig& cfg,
                       const std::filesystem::path& path);
/// Fixed-width table; significant p-values are marked with '*'.
std::string format_summary(const std::vector<StratumResult>& results);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

/// Two-group population of icosphere-based shapes. Every shape carries its
/// own random radial bumps; the second group is stretched to `second_axes`.
/// With `null_model` both groups are drawn from the first group's
/// distribution.
struct SyntheticDatasetSpec {
  int per_group = 10;
  int subdivisions = 3;
  double amplitude = 0.08;
  Vec3 second_axes{1.3, 1.0, 1.0};
  bool null_model = false;
  std::uint64_t seed = 0;
  std::string bone = "synthetic";
  Side side = Side::left;
};

/// Writes the meshes (OFF) and manifest.csv into `dir` and returns the
/// manifest.
DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir,
                                        const SyntheticDatasetSpec& spec);

}  // namespace sgw

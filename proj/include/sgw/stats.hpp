#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace sgw {

/// n x p data matrix: one row per shape.
struct DataMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> labels;
  std::vector<std::string> ids;

  int rows() const noexcept { return static_cast<int>(values.rows()); }
  int cols() const noexcept { return static_cast<int>(values.cols()); }
};

/// Throws unless labels/ids match the row count and every entry is finite.
void validate(const DataMatrix& data);

/// Exactly two groups of at least two rows each. Group order follows first
/// appearance of each label.
struct TwoGroups {
  std::string first_label;
  std::string second_label;
  /// true for rows in the first group
  std::vector<bool> membership;
  int first_size = 0;
  int second_size = 0;
};

/// Throws GroupCountError unless the labels form two groups of size >= 2 and
/// n >= 4.
TwoGroups split_groups(const DataMatrix& data);

struct PcaResult {
  DataMatrix scores;
  /// All singular values of the centered matrix, descending.
  Eigen::VectorXd singular_values;
  /// p x d principal directions, largest-magnitude loading positive.
  Eigen::MatrixXd directions;
};

/// Projects the column-centered data onto its top d principal directions.
/// Requires 1 <= d <= min(n - 1, p).
PcaResult pca(const DataMatrix& data, int dims);
DataMatrix pca_reduce(const DataMatrix& data, int dims);

/// Singular values below this fraction of the largest are treated as zero.
/// Components that small are rounding residue; MANOVA is affine invariant and
/// would weight them like any other direction.
constexpr double kRankTolerance = 1e-10;

/// Number of singular values above kRankTolerance * s_1.
int numerical_rank(const Eigen::VectorXd& singular_values);

struct ManovaResult {
  double wilks_lambda = 1.0;
  double f_statistic = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;
  double p_value = 1.0;
};

/// One-way two-group MANOVA: Lambda = det(E) / det(E + H), exact F test with
/// (d, n - d - 1) degrees of freedom. Throws SingularScatter when E is not
/// positive definite and InvalidParam when d > n - 2.
ManovaResult manova_two_group(const DataMatrix& data);

struct PermutationResult {
  double observed = 1.0;
  double p_value = 1.0;
  /// Relabelings evaluated (all of them when enumerated).
  long long evaluated = 0;
  bool enumerated = false;
};

/// Label-permutation test on Wilks' Lambda (smaller means more separated).
/// Sampled: p = (1 + #{Lambda_perm <= Lambda_obs}) / (n_perm + 1), replicate r
/// drawn from its own seeded substream. When C(n, n1) <= n_perm every
/// relabeling is enumerated and p = #{Lambda <= Lambda_obs} / C(n, n1).
/// `jobs` > 1 evaluates replicates on worker threads with identical results.
PermutationResult permutation_test(const DataMatrix& data, int n_perm, std::uint64_t seed,
                                   int jobs = 1);

struct GroupComparison {
  double wilks_lambda = 1.0;
  double manova_p = 1.0;
  double permutation_p = 1.0;
  int pca_dims = 0;
  int n_permutations = 0;
  std::uint64_t seed = 0;
  std::string first_label;
  std::string second_label;
  int first_size = 0;
  int second_size = 0;
};

/// PCA to min(pca_dims, numerical rank), then MANOVA and the permutation test
/// on the scores. `pca_dims` in the result is the dimension actually used.
GroupComparison compare_groups(const DataMatrix& data, int pca_dims, int n_perm,
                               std::uint64_t seed, int jobs = 1);

constexpr double kSignificanceLevel = 0.05;

}  // namespace sgw

#include "sgw/stats.hpp"

#include "sgw/eigen_solver.hpp"
#include "sgw/error.hpp"
#include "sgw/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <thread>

namespace sgw {

void validate(const DataMatrix& data) {
  const auto n = static_cast<std::size_t>(data.values.rows());
  if (data.labels.size() != n)
    throw DimensionMismatch("data matrix has " + std::to_string(n) + " rows but " +
                            std::to_string(data.labels.size()) + " labels");
  if (!data.ids.empty() && data.ids.size() != n)
    throw DimensionMismatch("data matrix has " + std::to_string(n) + " rows but " +
                            std::to_string(data.ids.size()) + " ids");
  if (!data.values.allFinite()) throw InvalidParam("data matrix contains non-finite entries");
}

TwoGroups split_groups(const DataMatrix& data) {
  validate(data);
  TwoGroups groups;
  if (data.labels.empty()) throw GroupCountError("data matrix is empty");
  groups.first_label = data.labels.front();
  bool have_second = false;
  for (const std::string& label : data.labels) {
    if (label == groups.first_label) {
      groups.membership.push_back(true);
      ++groups.first_size;
      continue;
    }
    if (!have_second) {
      groups.second_label = label;
      have_second = true;
    } else if (label != groups.second_label) {
      throw GroupCountError("more than two group labels ('" + groups.first_label + "', '" +
                            groups.second_label + "', '" + label + "')");
    }
    groups.membership.push_back(false);
    ++groups.second_size;
  }
  if (!have_second) throw GroupCountError("only one group label ('" + groups.first_label + "')");
  if (groups.first_size < 2 || groups.second_size < 2)
    throw GroupCountError("each group needs at least 2 members (" + std::to_string(groups.first_size) +
                          " vs " + std::to_string(groups.second_size) + ")");
  return groups;
}

PcaResult pca(const DataMatrix& data, int dims) {
  validate(data);
  const Eigen::Index n = data.values.rows();
  const Eigen::Index p = data.values.cols();
  const Eigen::Index limit = std::min<Eigen::Index>(n - 1, p);
  if (dims < 1 || dims > limit)
    throw InvalidParam("PCA dimension must lie in [1, " + std::to_string(limit) + "], got " +
                       std::to_string(dims));

  const Eigen::RowVectorXd mean = data.values.colwise().mean();
  const Eigen::MatrixXd centered = data.values.rowwise() - mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);

  PcaResult result;
  result.singular_values = svd.singularValues();
  result.directions = svd.matrixV().leftCols(dims);
  fix_signs(result.directions);
  result.scores.values = centered * result.directions;
  result.scores.labels = data.labels;
  result.scores.ids = data.ids;
  return result;
}

DataMatrix pca_reduce(const DataMatrix& data, int dims) { return pca(data, dims).scores; }

int numerical_rank(const Eigen::VectorXd& singular_values) {
  if (singular_values.size() == 0 || !(singular_values[0] > 0.0)) return 0;
  const double cutoff = kRankTolerance * singular_values[0];
  return static_cast<int>((singular_values.array() > cutoff).count());
}

namespace {

/// Centers the columns and scales them to unit norm. Wilks' Lambda is
/// invariant under this map, and it keeps the scatter matrices well scaled
/// when features span many orders of magnitude (as PCA scores do).
Eigen::MatrixXd standardized(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x.rowwise() - x.colwise().mean();
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double norm = out.col(c).norm();
    if (!(norm > 0.0))
      throw SingularScatter("feature " + std::to_string(c) + " is constant; scatter is singular");
    out.col(c) /= norm;
  }
  return out;
}

struct Scatter {
  Eigen::MatrixXd within;
  Eigen::MatrixXd between;
};

Scatter scatter_matrices(const Eigen::MatrixXd& x, const std::vector<bool>& membership) {
  const Eigen::Index d = x.cols();
  Eigen::RowVectorXd sum[2] = {Eigen::RowVectorXd::Zero(d), Eigen::RowVectorXd::Zero(d)};
  double count[2] = {0.0, 0.0};
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int g = membership[static_cast<std::size_t>(i)] ? 0 : 1;
    sum[g] += x.row(i);
    count[g] += 1.0;
  }
  const Eigen::RowVectorXd mean[2] = {sum[0] / count[0], sum[1] / count[1]};
  const Eigen::RowVectorXd grand = (sum[0] + sum[1]) / (count[0] + count[1]);

  Scatter s{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d)};
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int g = membership[static_cast<std::size_t>(i)] ? 0 : 1;
    const Eigen::RowVectorXd r = x.row(i) - mean[g];
    s.within.noalias() += r.transpose() * r;
  }
  for (int g = 0; g < 2; ++g) {
    const Eigen::RowVectorXd r = mean[g] - grand;
    s.between.noalias() += count[g] * r.transpose() * r;
  }
  return s;
}

double log_det_pd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
    throw SingularScatter(std::string(what) +
                          " scatter matrix is singular; reduce the feature dimension");
  }
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Wilks' Lambda for a relabeling, via the two-group identity
/// Lambda = 1 - (n1 n2 / n) delta^T T^{-1} delta with T the (label-free)
/// total scatter.
class FastWilks {
 public:
  explicit FastWilks(const Eigen::MatrixXd& x) : x_(standardized(x)) {
    const Eigen::MatrixXd total = x_.transpose() * x_;
    llt_.compute(total);
    if (llt_.info() != Eigen::Success || llt_.rcond() < 1e-14)
      throw SingularScatter("total scatter matrix is singular; reduce the feature dimension");
  }

  double operator()(const std::vector<bool>& membership) const {
    const Eigen::Index d = x_.cols();
    Eigen::VectorXd sum[2] = {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
    double count[2] = {0.0, 0.0};
    for (Eigen::Index i = 0; i < x_.rows(); ++i) {
      const int g = membership[static_cast<std::size_t>(i)] ? 0 : 1;
      sum[g] += x_.row(i).transpose();
      count[g] += 1.0;
    }
    const Eigen::VectorXd delta = sum[0] / count[0] - sum[1] / count[1];
    const Eigen::VectorXd z = llt_.matrixL().solve(delta);
    const double c = count[0] * count[1] / (count[0] + count[1]);
    return 1.0 - c * z.squaredNorm();
  }

 private:
  Eigen::MatrixXd x_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// C(n, r), saturating at `cap` + 1.
long long binomial_capped(int n, int r, long long cap) {
  r = std::min(r, n - r);
  long double value = 1.0L;
  for (int i = 1; i <= r; ++i) {
    value = value * (n - r + i) / i;
    if (value > static_cast<long double>(cap)) return cap + 1;
  }
  return std::llround(value);
}

}  // namespace

ManovaResult manova_two_group(const DataMatrix& data) {
  const TwoGroups groups = split_groups(data);
  const int n = data.rows();
  const int d = data.cols();
  if (d < 1) throw InvalidParam("MANOVA needs at least one feature");
  if (d > n - 2)
    throw InvalidParam("MANOVA needs d <= n - 2 (d = " + std::to_string(d) +
                       ", n = " + std::to_string(n) + ")");

  const Scatter s = scatter_matrices(standardized(data.values), groups.membership);
  const double log_within = log_det_pd(s.within, "within-group");
  const double log_total = log_det_pd(s.within + s.between, "total");

  ManovaResult r;
  r.wilks_lambda = std::clamp(std::exp(log_within - log_total), 0.0, 1.0);
  r.df1 = d;
  r.df2 = n - d - 1;
  r.f_statistic = r.wilks_lambda > 0.0
                      ? std::max(0.0, (r.df2 / r.df1) * (1.0 - r.wilks_lambda) / r.wilks_lambda)
                      : INFINITY;
  if (std::isinf(r.f_statistic)) {
    r.p_value = 0.0;
  } else {
    const boost::math::fisher_f_distribution<double> dist(r.df1, r.df2);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.f_statistic));
  }
  return r;
}

PermutationResult permutation_test(const DataMatrix& data, int n_perm, std::uint64_t seed,
                                   int jobs) {
  if (n_perm < 1) throw InvalidParam("number of permutations must be >= 1");
  const TwoGroups groups = split_groups(data);
  const int n = data.rows();
  if (data.cols() > n - 2)
    throw InvalidParam("permutation test needs d <= n - 2 (d = " + std::to_string(data.cols()) +
                       ", n = " + std::to_string(n) + ")");

  const FastWilks wilks(data.values);
  PermutationResult result;
  result.observed = wilks(groups.membership);

  const long long space = binomial_capped(n, groups.first_size, n_perm);
  if (space <= n_perm) {
    // Enumerate every choice of first-group rows (lexicographic combinations).
    std::vector<int> chosen(static_cast<std::size_t>(groups.first_size));
    for (int i = 0; i < groups.first_size; ++i) chosen[i] = i;
    std::vector<bool> membership(static_cast<std::size_t>(n));
    long long hits = 0;
    long long total = 0;
    for (;;) {
      std::fill(membership.begin(), membership.end(), false);
      for (int c : chosen) membership[static_cast<std::size_t>(c)] = true;
      if (wilks(membership) <= result.observed) ++hits;
      ++total;
      int pos = groups.first_size - 1;
      while (pos >= 0 && chosen[pos] == n - groups.first_size + pos) --pos;
      if (pos < 0) break;
      ++chosen[pos];
      for (int i = pos + 1; i < groups.first_size; ++i) chosen[i] = chosen[i - 1] + 1;
    }
    result.enumerated = true;
    result.evaluated = total;
    result.p_value = static_cast<double>(hits) / static_cast<double>(total);
    return result;
  }

  std::vector<double> statistics(static_cast<std::size_t>(n_perm));
  auto run = [&](int begin, int end) {
    std::vector<bool> membership = groups.membership;
    std::vector<char> shuffled(membership.size());
    for (int r = begin; r < end; ++r) {
      for (std::size_t i = 0; i < membership.size(); ++i) shuffled[i] = groups.membership[i] ? 1 : 0;
      SplitMix64 rng(substream_seed(seed, static_cast<std::uint64_t>(r)));
      rng.shuffle(std::span<char>(shuffled));
      for (std::size_t i = 0; i < membership.size(); ++i) membership[i] = shuffled[i] != 0;
      statistics[static_cast<std::size_t>(r)] = wilks(membership);
    }
  };

  const int workers = std::clamp(jobs, 1, n_perm);
  if (workers == 1) {
    run(0, n_perm);
  } else {
    std::vector<std::jthread> threads;
    for (int w = 0; w < workers; ++w) {
      const int begin = static_cast<int>(static_cast<long long>(n_perm) * w / workers);
      const int end = static_cast<int>(static_cast<long long>(n_perm) * (w + 1) / workers);
      threads.emplace_back(run, begin, end);
    }
  }

  const auto hits = std::count_if(statistics.begin(), statistics.end(),
                                  [&](double s) { return s <= result.observed; });
  result.evaluated = n_perm;
  result.p_value = static_cast<double>(hits + 1) / static_cast<double>(n_perm + 1);
  return result;
}

GroupComparison compare_groups(const DataMatrix& data, int pca_dims, int n_perm,
                               std::uint64_t seed, int jobs) {
  const TwoGroups groups = split_groups(data);
  PcaResult projected = pca(data, pca_dims);
  const int rank = numerical_rank(projected.singular_values);
  if (rank == 0) throw SingularScatter("all rows are identical");
  if (rank < pca_dims) {
    pca_dims = rank;
    projected.scores.values = projected.scores.values.leftCols(rank).eval();
  }
  const DataMatrix& reduced = projected.scores;
  const ManovaResult manova = manova_two_group(reduced);
  const PermutationResult perm = permutation_test(reduced, n_perm, seed, jobs);

  GroupComparison out;
  out.wilks_lambda = manova.wilks_lambda;
  out.manova_p = manova.p_value;
  out.permutation_p = perm.p_value;
  out.pca_dims = pca_dims;
  out.n_permutations = n_perm;
  out.seed = seed;
  out.first_label = groups.first_label;
  out.second_label = groups.second_label;
  out.first_size = groups.first_size;
  out.second_size = groups.second_size;
  return out;
}

}  // namespace sgw

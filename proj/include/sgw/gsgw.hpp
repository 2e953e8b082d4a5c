#pragma once

#include "sgw/sgws.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sgw {

/// Global descriptor g = S a.
struct GsgwVector {
  Eigen::VectorXd values;
  int resolution = 0;
  std::uint64_t mesh_hash = 0;

  int length() const noexcept { return static_cast<int>(values.size()); }
};

/// g_i = sum_j S_ij a_j. With `normalize_by_area` the result is divided by
/// sum_j a_j.
GsgwVector aggregate(const SignatureMatrix& sig, const Eigen::VectorXd& areas,
                     bool normalize_by_area = false, std::uint64_t mesh_hash = 0);

/// Euclidean distance between descriptors of equal resolution.
double gsgw_distance(const GsgwVector& a, const GsgwVector& b);

struct GsgwRow {
  std::string id;
  std::string label;
  Eigen::VectorXd values;
};

/// One row per shape: id, label, then the p values (17 significant digits).
/// Writes a header "id,label,g1,...,gp".
void write_gsgw_csv(const std::vector<GsgwRow>& rows, const std::filesystem::path& path);
std::vector<GsgwRow> read_gsgw_csv(const std::filesystem::path& path);

}  // namespace sgw

#include "sgw/gsgw.hpp"

#include "sgw/csv.hpp"
#include "sgw/error.hpp"

#include <fstream>

namespace sgw {

GsgwVector aggregate(const SignatureMatrix& sig, const Eigen::VectorXd& areas,
                     bool normalize_by_area, std::uint64_t mesh_hash) {
  if (sig.values.cols() != areas.size()) {
    throw DimensionMismatch("signature matrix has " + std::to_string(sig.values.cols()) +
                            " columns but " + std::to_string(areas.size()) + " areas were given");
  }
  GsgwVector g;
  g.resolution = sig.resolution;
  g.mesh_hash = mesh_hash;
  g.values = sig.values * areas;
  if (normalize_by_area) g.values /= areas.sum();
  return g;
}

double gsgw_distance(const GsgwVector& a, const GsgwVector& b) {
  if (a.length() != b.length() || a.resolution != b.resolution) {
    throw DimensionMismatch("descriptors differ in length or resolution (" +
                            std::to_string(a.length()) + " vs " + std::to_string(b.length()) + ")");
  }
  return (a.values - b.values).norm();
}

void write_gsgw_csv(const std::vector<GsgwRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  const Eigen::Index p = rows.empty() ? 0 : rows.front().values.size();
  out << "id,label";
  for (Eigen::Index i = 0; i < p; ++i) out << ",g" << (i + 1);
  out << '\n';
  for (const GsgwRow& row : rows) {
    if (row.values.size() != p) throw DimensionMismatch("GSGW rows have different lengths");
    out << csv::escape(row.id) << ',' << csv::escape(row.label);
    for (Eigen::Index i = 0; i < p; ++i) out << ',' << csv::exact(row.values[i]);
    out << '\n';
  }
}

std::vector<GsgwRow> read_gsgw_csv(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  if (table.header.size() < 3 || table.header[0] != "id" || table.header[1] != "label")
    throw ParseError("GSGW CSV must start with columns id,label", 1);
  std::vector<GsgwRow> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& fields = table.rows[r];
    GsgwRow row{fields[0], fields[1], Eigen::VectorXd(static_cast<Eigen::Index>(fields.size() - 2))};
    for (std::size_t i = 2; i < fields.size(); ++i)
      row.values[static_cast<Eigen::Index>(i - 2)] = csv::to_double(fields[i], table.lines[r]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace sgw

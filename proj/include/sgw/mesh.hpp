#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sgw {

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<int, 3>;

enum class MeshFormat { off, obj, ply_ascii, synthetic };

const char* to_string(MeshFormat format) noexcept;

struct MeshProvenance {
  std::string source_path;
  MeshFormat format = MeshFormat::synthetic;
  std::optional<std::string> label;
};

/// Validated triangle mesh. Instances can only be obtained through
/// TriangleMesh::create (or the loaders/generators built on it), so every
/// live object satisfies the invariants checked there.
class TriangleMesh {
 public:
  /// Validates and builds a mesh. Throws ValidationError when an index is out
  /// of range, a triangle repeats a vertex or has zero area, an edge has more
  /// than two incident triangles, a vertex is unreferenced, or m < 3.
  static TriangleMesh create(std::vector<Vec3> vertices, std::vector<Triangle> triangles,
                             MeshProvenance provenance = {});

  const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  const MeshProvenance& provenance() const noexcept { return provenance_; }

  int vertex_count() const noexcept { return static_cast<int>(vertices_.size()); }
  int triangle_count() const noexcept { return static_cast<int>(triangles_.size()); }

  double surface_area() const;

  /// 64-bit FNV-1a hash of the vertex coordinate bytes and triangle indices.
  /// Provenance does not participate.
  std::uint64_t content_hash() const noexcept;

  TriangleMesh with_label(std::optional<std::string> label) const;

 private:
  friend TriangleMesh rigid_transform(const TriangleMesh&, const Eigen::Matrix3d&, const Vec3&);
  friend TriangleMesh scale_mesh(const TriangleMesh&, double);

  TriangleMesh() = default;

  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  MeshProvenance provenance_;
};

std::string hash_hex(std::uint64_t hash);

/// Loads an ASCII OFF, OBJ (v/f records) or ASCII PLY file. The format is
/// inferred from the extension unless given. Polygons are fan-triangulated.
TriangleMesh load_mesh(const std::filesystem::path& path,
                       std::optional<MeshFormat> format = std::nullopt);

/// Parses mesh text already in memory; `origin` is only used for provenance.
TriangleMesh parse_mesh(const std::string& text, MeshFormat format,
                        const std::string& origin = {});

/// OFF text with 12 significant digits per coordinate.
std::string to_off(const TriangleMesh& mesh);
void write_off(const TriangleMesh& mesh, const std::filesystem::path& path);

enum class SyntheticKind { unit_sphere, ellipsoid, bumpy_sphere };

std::optional<SyntheticKind> parse_synthetic_kind(const std::string& name);

struct SyntheticParams {
  /// Semi-axis lengths applied after the radial perturbation.
  Vec3 axes{1.0, 1.0, 1.0};
  /// Relative amplitude of the smooth radial bumps. bumpy_sphere only uses
  /// this; ellipsoid applies it too when nonzero.
  double amplitude = 0.0;
};

/// Icosphere-based generators. unit_sphere has 10*4^s+2 vertices on the unit
/// sphere. Output is a deterministic function of all arguments.
TriangleMesh make_synthetic(SyntheticKind kind, int subdivisions, const SyntheticParams& params = {},
                            std::uint64_t seed = 0);

/// Applies x -> R x + t. R must be orthogonal to 1e-10 (reflections allowed).
TriangleMesh rigid_transform(const TriangleMesh& mesh, const Eigen::Matrix3d& rotation,
                             const Vec3& translation);

/// Multiplies every vertex position by `factor` (> 0).
TriangleMesh scale_mesh(const TriangleMesh& mesh, double factor);

}  // namespace sgw

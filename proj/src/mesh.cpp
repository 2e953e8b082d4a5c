#include "sgw/mesh.hpp"

#include "sgw/error.hpp"
#include "sgw/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace sgw {

const char* to_string(MeshFormat format) noexcept {
  switch (format) {
    case MeshFormat::off: return "OFF";
    case MeshFormat::obj: return "OBJ";
    case MeshFormat::ply_ascii: return "PLY-ascii";
    case MeshFormat::synthetic: return "synthetic";
  }
  return "unknown";
}

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

double triangle_area(const std::vector<Vec3>& v, const Triangle& t) {
  return 0.5 * (v[t[1]] - v[t[0]]).cross(v[t[2]] - v[t[0]]).norm();
}

}  // namespace

TriangleMesh TriangleMesh::create(std::vector<Vec3> vertices, std::vector<Triangle> triangles,
                                  MeshProvenance provenance) {
  const int m = static_cast<int>(vertices.size());
  if (m < 3) throw ValidationError("mesh needs at least 3 vertices, got " + std::to_string(m));
  if (triangles.empty()) throw ValidationError("mesh has no triangles");

  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (!vertices[i].allFinite())
      throw ValidationError("vertex " + std::to_string(i) + " has a non-finite coordinate");
  }

  std::vector<char> referenced(vertices.size(), 0);
  std::vector<std::uint64_t> edges;
  edges.reserve(triangles.size() * 3);
  for (std::size_t f = 0; f < triangles.size(); ++f) {
    const Triangle& t = triangles[f];
    for (int idx : t) {
      if (idx < 0 || idx >= m) {
        throw ValidationError("triangle " + std::to_string(f) + " references vertex " +
                              std::to_string(idx) + " outside [0, " + std::to_string(m) + ")");
      }
      referenced[idx] = 1;
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw ValidationError("triangle " + std::to_string(f) + " repeats a vertex");

    const Vec3& a = vertices[t[0]];
    const Vec3& b = vertices[t[1]];
    const Vec3& c = vertices[t[2]];
    const double longest =
        std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
    if ((b - a).cross(c - a).norm() <= 1e-12 * longest)
      throw ValidationError("triangle " + std::to_string(f) + " has zero area");

    edges.push_back(edge_key(t[0], t[1]));
    edges.push_back(edge_key(t[1], t[2]));
    edges.push_back(edge_key(t[2], t[0]));
  }

  std::sort(edges.begin(), edges.end());
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j] == edges[i]) ++j;
    if (j - i > 2) {
      throw ValidationError("non-manifold edge (" + std::to_string(edges[i] >> 32) + ", " +
                            std::to_string(edges[i] & 0xffffffffULL) + ") has " +
                            std::to_string(j - i) + " incident triangles");
    }
    i = j;
  }

  if (auto it = std::find(referenced.begin(), referenced.end(), 0); it != referenced.end()) {
    throw ValidationError("vertex " + std::to_string(it - referenced.begin()) +
                          " is not referenced by any triangle");
  }

  TriangleMesh mesh;
  mesh.vertices_ = std::move(vertices);
  mesh.triangles_ = std::move(triangles);
  mesh.provenance_ = std::move(provenance);
  return mesh;
}

double TriangleMesh::surface_area() const {
  double total = 0.0;
  for (const Triangle& t : triangles_) total += triangle_area(vertices_, t);
  return total;
}

std::uint64_t TriangleMesh::content_hash() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t counts[2] = {vertices_.size(), triangles_.size()};
  feed(counts, sizeof(counts));
  for (const Vec3& v : vertices_) feed(v.data(), 3 * sizeof(double));
  for (const Triangle& t : triangles_) {
    const std::int32_t idx[3] = {t[0], t[1], t[2]};
    feed(idx, sizeof(idx));
  }
  return h;
}

TriangleMesh TriangleMesh::with_label(std::optional<std::string> label) const {
  TriangleMesh copy = *this;
  copy.provenance_.label = std::move(label);
  return copy;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string> tokens;
};

/// Splits text into non-empty lines of whitespace-separated tokens, dropping
/// '#' comments.
std::vector<Line> tokenize(const std::string& text) {
  std::vector<Line> lines;
  std::istringstream in(text);
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    Line line{number, {}};
    std::string tok;
    while (ls >> tok) line.tokens.push_back(tok);
    if (!line.tokens.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

double parse_double(const std::string& tok, std::size_t line) {
  double value = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && tok.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ParseError("expected a number, got '" + tok + "'", line);
  return value;
}

long long parse_int(const std::string& tok, std::size_t line) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("expected an integer, got '" + tok + "'", line);
  return value;
}

int to_index(long long value, std::size_t line) {
  if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max())
    throw ParseError("vertex index out of integer range", line);
  return static_cast<int>(value);
}

void fan_triangulate(const std::vector<int>& polygon, std::size_t line,
                     std::vector<Triangle>& out) {
  if (polygon.size() < 3) throw ParseError("face has fewer than 3 vertices", line);
  for (std::size_t i = 1; i + 1 < polygon.size(); ++i)
    out.push_back({polygon[0], polygon[i], polygon[i + 1]});
}

TriangleMesh parse_off(const std::string& text, MeshProvenance prov) {
  const auto lines = tokenize(text);
  if (lines.empty()) throw ParseError("empty OFF file", 1);

  // The header keyword may share its line with the counts.
  std::size_t cursor = 0;
  std::vector<std::string> counts = lines[0].tokens;
  if (counts[0] != "OFF") throw ParseError("missing OFF header", lines[0].number);
  counts.erase(counts.begin());
  if (counts.empty()) {
    if (lines.size() < 2) throw ParseError("missing OFF counts", lines[0].number);
    cursor = 1;
    counts = lines[1].tokens;
  }
  const std::size_t count_line = lines[cursor].number;
  if (counts.size() < 2) throw ParseError("OFF counts line needs vertex and face counts", count_line);
  const long long nv = parse_int(counts[0], count_line);
  const long long nf = parse_int(counts[1], count_line);
  if (nv < 0 || nf < 0) throw ParseError("negative element count", count_line);
  ++cursor;

  if (lines.size() < cursor + static_cast<std::size_t>(nv + nf)) {
    const std::size_t last = lines.empty() ? 1 : lines.back().number;
    throw ParseError("OFF file truncated: expected " + std::to_string(nv) + " vertices and " +
                         std::to_string(nf) + " faces",
                     last);
  }

  std::vector<Vec3> vertices;
  vertices.reserve(static_cast<std::size_t>(nv));
  for (long long i = 0; i < nv; ++i, ++cursor) {
    const Line& l = lines[cursor];
    if (l.tokens.size() < 3) throw ParseError("vertex needs 3 coordinates", l.number);
    vertices.emplace_back(parse_double(l.tokens[0], l.number), parse_double(l.tokens[1], l.number),
                          parse_double(l.tokens[2], l.number));
  }

  std::vector<Triangle> triangles;
  std::vector<int> polygon;
  for (long long f = 0; f < nf; ++f, ++cursor) {
    const Line& l = lines[cursor];
    const long long n = parse_int(l.tokens[0], l.number);
    if (n < 0 || l.tokens.size() < static_cast<std::size_t>(n) + 1)
      throw ParseError("face declares " + l.tokens[0] + " vertices but lists fewer", l.number);
    polygon.clear();
    for (long long i = 0; i < n; ++i)
      polygon.push_back(to_index(parse_int(l.tokens[1 + i], l.number), l.number));
    fan_triangulate(polygon, l.number, triangles);
  }
  return TriangleMesh::create(std::move(vertices), std::move(triangles), std::move(prov));
}

TriangleMesh parse_obj(const std::string& text, MeshProvenance prov) {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<int> polygon;
  for (const Line& l : tokenize(text)) {
    const std::string& tag = l.tokens[0];
    if (tag == "v") {
      if (l.tokens.size() < 4) throw ParseError("vertex needs 3 coordinates", l.number);
      vertices.emplace_back(parse_double(l.tokens[1], l.number), parse_double(l.tokens[2], l.number),
                            parse_double(l.tokens[3], l.number));
    } else if (tag == "f") {
      polygon.clear();
      for (std::size_t i = 1; i < l.tokens.size(); ++i) {
        const std::string& tok = l.tokens[i];
        const long long raw = parse_int(tok.substr(0, tok.find('/')), l.number);
        if (raw == 0) throw ParseError("OBJ indices are 1-based; got 0", l.number);
        // Negative indices count back from the most recent vertex.
        const long long index = raw > 0 ? raw - 1 : static_cast<long long>(vertices.size()) + raw;
        polygon.push_back(to_index(index, l.number));
      }
      fan_triangulate(polygon, l.number, triangles);
    }
    // Other record types (vn, vt, g, o, s, usemtl, ...) are ignored.
  }
  return TriangleMesh::create(std::move(vertices), std::move(triangles), std::move(prov));
}

struct PlyProperty {
  std::string name;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  long long count = 0;
  std::vector<PlyProperty> properties;
};

TriangleMesh parse_ply(const std::string& text, MeshProvenance prov) {
  // PLY comments start with the "comment" keyword, not '#', so read raw lines.
  std::istringstream in(text);
  std::string raw;
  std::size_t number = 0;
  auto next_tokens = [&](std::vector<std::string>& tokens) {
    while (std::getline(in, raw)) {
      ++number;
      std::istringstream ls(raw);
      tokens.clear();
      std::string tok;
      while (ls >> tok) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  };

  std::vector<std::string> tokens;
  if (!next_tokens(tokens) || tokens[0] != "ply") throw ParseError("missing 'ply' magic", number);

  std::vector<PlyElement> elements;
  bool saw_format = false;
  for (;;) {
    if (!next_tokens(tokens)) throw ParseError("PLY header not terminated by end_header", number);
    const std::string& key = tokens[0];
    if (key == "end_header") break;
    if (key == "comment" || key == "obj_info") continue;
    if (key == "format") {
      if (tokens.size() < 2 || tokens[1] != "ascii")
        throw ParseError("only ASCII PLY is supported", number);
      saw_format = true;
    } else if (key == "element") {
      if (tokens.size() < 3) throw ParseError("malformed element line", number);
      elements.push_back({tokens[1], parse_int(tokens[2], number), {}});
    } else if (key == "property") {
      if (elements.empty()) throw ParseError("property before any element", number);
      if (tokens.size() >= 5 && tokens[1] == "list")
        elements.back().properties.push_back({tokens[4], true});
      else if (tokens.size() >= 3)
        elements.back().properties.push_back({tokens[2], false});
      else
        throw ParseError("malformed property line", number);
    } else {
      throw ParseError("unknown PLY header keyword '" + key + "'", number);
    }
  }
  if (!saw_format) throw ParseError("PLY header has no format line", number);

  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<int> polygon;
  for (const PlyElement& el : elements) {
    for (long long row = 0; row < el.count; ++row) {
      if (!next_tokens(tokens))
        throw ParseError("PLY data truncated in element '" + el.name + "'", number);
      std::size_t pos = 0;
      auto take = [&]() -> const std::string& {
        if (pos >= tokens.size()) throw ParseError("too few values in '" + el.name + "' row", number);
        return tokens[pos++];
      };
      Vec3 point = Vec3::Zero();
      int coords_seen = 0;
      bool have_face = false;
      for (const PlyProperty& prop : el.properties) {
        if (prop.is_list) {
          const long long n = parse_int(take(), number);
          if (n < 0) throw ParseError("negative list length", number);
          const bool is_face_list =
              el.name == "face" && (prop.name == "vertex_indices" || prop.name == "vertex_index");
          if (is_face_list) polygon.clear();
          for (long long i = 0; i < n; ++i) {
            const std::string& tok = take();
            if (is_face_list) polygon.push_back(to_index(parse_int(tok, number), number));
          }
          have_face = have_face || is_face_list;
        } else {
          const std::string& tok = take();
          if (el.name == "vertex") {
            const int axis = prop.name == "x" ? 0 : prop.name == "y" ? 1 : prop.name == "z" ? 2 : -1;
            if (axis >= 0) {
              point[axis] = parse_double(tok, number);
              ++coords_seen;
            }
          }
        }
      }
      if (el.name == "vertex") {
        if (coords_seen != 3) throw ParseError("vertex element lacks x/y/z properties", number);
        vertices.push_back(point);
      } else if (el.name == "face") {
        if (!have_face) throw ParseError("face element lacks a vertex_indices list", number);
        fan_triangulate(polygon, number, triangles);
      }
    }
  }
  return TriangleMesh::create(std::move(vertices), std::move(triangles), std::move(prov));
}

}  // namespace

TriangleMesh parse_mesh(const std::string& text, MeshFormat format, const std::string& origin) {
  MeshProvenance prov{origin, format, std::nullopt};
  switch (format) {
    case MeshFormat::off: return parse_off(text, std::move(prov));
    case MeshFormat::obj: return parse_obj(text, std::move(prov));
    case MeshFormat::ply_ascii: return parse_ply(text, std::move(prov));
    case MeshFormat::synthetic: break;
  }
  throw InvalidParam("synthetic meshes cannot be parsed from text");
}

TriangleMesh load_mesh(const std::filesystem::path& path, std::optional<MeshFormat> format) {
  if (!format) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".off") format = MeshFormat::off;
    else if (ext == ".obj") format = MeshFormat::obj;
    else if (ext == ".ply") format = MeshFormat::ply_ascii;
    else throw InvalidParam("cannot infer mesh format from extension of '" + path.string() + "'");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open mesh file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mesh(buf.str(), *format, path.string());
}

std::string to_off(const TriangleMesh& mesh) {
  std::string out = "OFF\n" + std::to_string(mesh.vertex_count()) + " " +
                    std::to_string(mesh.triangle_count()) + " 0\n";
  char buf[128];
  for (const Vec3& v : mesh.vertices()) {
    std::snprintf(buf, sizeof(buf), "%.12g %.12g %.12g\n", v.x(), v.y(), v.z());
    out += buf;
  }
  for (const Triangle& t : mesh.triangles()) {
    std::snprintf(buf, sizeof(buf), "3 %d %d %d\n", t[0], t[1], t[2]);
    out += buf;
  }
  return out;
}

void write_off(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << to_off(mesh);
}

// ---------------------------------------------------------------------------
// Synthetic shapes

std::optional<SyntheticKind> parse_synthetic_kind(const std::string& name) {
  if (name == "unit_sphere") return SyntheticKind::unit_sphere;
  if (name == "ellipsoid") return SyntheticKind::ellipsoid;
  if (name == "bumpy_sphere") return SyntheticKind::bumpy_sphere;
  return std::nullopt;
}

namespace {

void icosphere(int subdivisions, std::vector<Vec3>& vertices, std::vector<Triangle>& triangles) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  vertices = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
              {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
              {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (Vec3& v : vertices) v.normalize();
  triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::uint64_t, int> midpoints;
    auto midpoint = [&](int a, int b) {
      const auto key = edge_key(a, b);
      if (auto it = midpoints.find(key); it != midpoints.end()) return it->second;
      vertices.push_back((vertices[a] + vertices[b]).normalized());
      const int id = static_cast<int>(vertices.size()) - 1;
      midpoints.emplace(key, id);
      return id;
    };
    std::vector<Triangle> next;
    next.reserve(triangles.size() * 4);
    for (const Triangle& t : triangles) {
      const int ab = midpoint(t[0], t[1]);
      const int bc = midpoint(t[1], t[2]);
      const int ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    triangles = std::move(next);
  }
}

/// Smooth radial profile 1 + amplitude * sum_j w_j sin(f_j <n, d_j> + phase_j)
/// with sum_j |w_j| = 1, so the radius stays within [1 - amplitude, 1 + amplitude].
struct RadialBumps {
  static constexpr int kTerms = 8;
  std::array<Vec3, kTerms> directions;
  std::array<double, kTerms> weights{};
  std::array<double, kTerms> frequencies{};
  std::array<double, kTerms> phases{};
  double amplitude = 0.0;

  RadialBumps(double amp, std::uint64_t seed) : amplitude(amp) {
    SplitMix64 rng(seed);
    double total = 0.0;
    for (int j = 0; j < kTerms; ++j) {
      // Uniform direction on the sphere.
      const double z = rng.uniform(-1.0, 1.0);
      const double angle = rng.uniform(0.0, 2.0 * M_PI);
      const double r = std::sqrt(1.0 - z * z);
      directions[j] = Vec3(r * std::cos(angle), r * std::sin(angle), z);
      weights[j] = rng.uniform(-1.0, 1.0);
      frequencies[j] = rng.uniform(1.0, 3.0);
      phases[j] = rng.uniform(0.0, 2.0 * M_PI);
      total += std::abs(weights[j]);
    }
    for (double& w : weights) w /= total;
  }

  double radius(const Vec3& unit) const {
    double sum = 0.0;
    for (int j = 0; j < kTerms; ++j)
      sum += weights[j] * std::sin(frequencies[j] * unit.dot(directions[j]) + phases[j]);
    return 1.0 + amplitude * sum;
  }
};

}  // namespace

TriangleMesh make_synthetic(SyntheticKind kind, int subdivisions, const SyntheticParams& params,
                            std::uint64_t seed) {
  if (subdivisions < 0) throw InvalidParam("subdivisions must be >= 0");
  if (subdivisions > 7) throw InvalidParam("subdivisions above 7 are not supported");
  if (!(params.axes.array() > 0.0).all() || !params.axes.allFinite())
    throw InvalidParam("ellipsoid axis lengths must be positive");
  if (!(params.amplitude >= 0.0 && params.amplitude < 1.0))
    throw InvalidParam("bump amplitude must lie in [0, 1)");

  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  icosphere(subdivisions, vertices, triangles);

  Vec3 axes = Vec3::Ones();
  double amplitude = 0.0;
  const char* name = "unit_sphere";
  switch (kind) {
    case SyntheticKind::unit_sphere: break;
    case SyntheticKind::ellipsoid:
      axes = params.axes;
      amplitude = params.amplitude;
      name = "ellipsoid";
      break;
    case SyntheticKind::bumpy_sphere:
      amplitude = params.amplitude;
      name = "bumpy_sphere";
      break;
  }

  if (amplitude > 0.0) {
    const RadialBumps bumps(amplitude, seed);
    for (Vec3& v : vertices) v *= bumps.radius(v);
  }
  if (axes != Vec3::Ones()) {
    for (Vec3& v : vertices) v = v.cwiseProduct(axes);
  }

  char origin[160];
  std::snprintf(origin, sizeof(origin), "synthetic:%s/s=%d/axes=%g,%g,%g/amp=%g/seed=%llu", name,
                subdivisions, axes.x(), axes.y(), axes.z(), amplitude,
                static_cast<unsigned long long>(seed));
  return TriangleMesh::create(std::move(vertices), std::move(triangles),
                              {origin, MeshFormat::synthetic, std::nullopt});
}

TriangleMesh rigid_transform(const TriangleMesh& mesh, const Eigen::Matrix3d& rotation,
                             const Vec3& translation) {
  if (!rotation.allFinite() || !translation.allFinite())
    throw InvalidParam("rigid transform has non-finite entries");
  const double defect = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (defect > 1e-10)
    throw InvalidParam("rotation matrix is not orthogonal (|R^T R - I| = " + std::to_string(defect) + ")");

  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices_) v = rotation * v + translation;
  return out;
}

TriangleMesh scale_mesh(const TriangleMesh& mesh, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw InvalidParam("scale factor must be positive");
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices_) v *= factor;
  return out;
}

}  // namespace sgw

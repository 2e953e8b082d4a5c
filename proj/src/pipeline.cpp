#include "sgw/pipeline.hpp"

#include "sgw/csv.hpp"
#include "sgw/error.hpp"
#include "sgw/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <unistd.h>

namespace sgw {

const char* to_string(Side side) noexcept { return side == Side::left ? "left" : "right"; }

std::optional<Side> parse_side(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "left" || lower == "l") return Side::left;
  if (lower == "right" || lower == "r") return Side::right;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Manifest

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const csv::Table table = csv::read(path);
  const std::vector<std::string> expected = {"path", "subject", "group", "bone", "side"};
  if (table.header != expected)
    throw ParseError("manifest header must be 'path,subject,group,bone,side'", 1);

  DatasetManifest manifest;
  manifest.root = std::filesystem::absolute(path).parent_path();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& f = table.rows[r];
    const auto side = parse_side(f[4]);
    if (!side) throw ParseError("side must be 'left' or 'right', got '" + f[4] + "'", table.lines[r]);
    for (int i = 0; i < 4; ++i) {
      if (f[i].empty()) throw ParseError("empty field '" + expected[i] + "'", table.lines[r]);
    }
    std::filesystem::path mesh_path = f[0];
    if (mesh_path.is_relative()) mesh_path = manifest.root / mesh_path;
    manifest.entries.push_back({mesh_path.lexically_normal(), f[1], f[2], f[3], *side});
  }
  validate(manifest);
  return manifest;
}

void validate(const DatasetManifest& manifest) {
  if (manifest.entries.empty()) throw ValidationError("manifest has no entries");
  std::set<std::tuple<std::string, std::string, Side>> seen;
  for (const ManifestEntry& e : manifest.entries) {
    if (!seen.emplace(e.subject, e.bone, e.side).second) {
      throw ValidationError("duplicate manifest entry for subject '" + e.subject + "', bone '" +
                            e.bone + "', side " + to_string(e.side));
    }
    if (!std::filesystem::exists(e.path))
      throw ValidationError("mesh file '" + e.path.string() + "' does not exist");
  }
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "path,subject,group,bone,side\n";
  for (const ManifestEntry& e : manifest.entries) {
    out << csv::escape(e.path.string()) << ',' << csv::escape(e.subject) << ','
        << csv::escape(e.group) << ',' << csv::escape(e.bone) << ',' << to_string(e.side) << '\n';
  }
}

std::string describe(const RunConfig& cfg) {
  std::ostringstream out;
  out << "k = " << cfg.k << "\n"
      << "resolution = " << cfg.resolution << " (signature length "
      << signature_length(cfg.resolution) << ")\n"
      << "pca_dims = " << cfg.pca_dims << "\n"
      << "permutations = " << cfg.n_permutations << "\n"
      << "seed = " << cfg.seed << "\n"
      << "kernel = " << kernel_id(cfg.kernel) << "\n"
      << "area_scheme = " << to_string(cfg.area_scheme) << "\n"
      << "area_factor = " << (cfg.area_factor ? "on" : "off") << "\n"
      << "normalize_gsgw = " << (cfg.normalize_gsgw ? "on" : "off") << "\n"
      << "cache_dir = " << (cfg.cache_dir ? cfg.cache_dir->string() : std::string("(none)")) << "\n"
      << "jobs = " << cfg.jobs << "\n";
  return out.str();
}

int effective_pca_dims(int requested, int features, int rows) {
  return std::max(1, std::min({requested, features, rows - 2}));
}

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(RunConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.k < 2) throw InvalidParam("k must be >= 2 for signatures");
  signature_length(cfg_.resolution);
  if (cfg_.pca_dims < 1) throw InvalidParam("pca_dims must be >= 1");
  if (cfg_.n_permutations < 1) throw InvalidParam("permutations must be >= 1");
  if (cfg_.jobs < 1) cfg_.jobs = 1;
  if (cfg_.cache_dir) std::filesystem::create_directories(*cfg_.cache_dir);
}

std::filesystem::path Pipeline::spectrum_file(std::uint64_t hash, int k) const {
  return *cfg_.cache_dir /
         (hash_hex(hash) + "-" + to_string(cfg_.area_scheme) + "-k" + std::to_string(k) + ".eig");
}

std::string Pipeline::descriptor_name(std::uint64_t hash) const {
  return (hash_hex(hash) + "-" + to_string(cfg_.area_scheme) + "-k" + std::to_string(cfg_.k) + "-R" +
          std::to_string(cfg_.resolution) + "-" + kernel_id(cfg_.kernel) + "-a" +
          (cfg_.area_factor ? "1" : "0") + "-n" + (cfg_.normalize_gsgw ? "1" : "0") + ".gsgw");
}

std::filesystem::path Pipeline::descriptor_file(std::uint64_t hash) const {
  return *cfg_.cache_dir / descriptor_name(hash);
}

EigenSystem Pipeline::spectrum(const TriangleMesh& mesh, const LaplacianPair& lap, int k) {
  const std::uint64_t hash = mesh.content_hash();
  {
    std::lock_guard lock(mutex_);
    // Smallest cached k' >= k; exact matches come first.
    auto it = spectra_.lower_bound({hash, k});
    if (it != spectra_.end() && it->first.first == hash) {
      ++counters_.spectrum_cache_hits;
      return it->second.count() == k ? it->second : it->second.truncated(k);
    }
  }

  if (cfg_.cache_dir) {
    std::optional<CachedSpectrum> found = load_spectrum(spectrum_file(hash, k));
    if (!found) {
      // Any larger solve for the same mesh.
      const std::string prefix = hash_hex(hash) + "-" + to_string(cfg_.area_scheme) + "-k";
      int best = 0;
      for (const auto& entry : std::filesystem::directory_iterator(*cfg_.cache_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind(prefix, 0) != 0 || entry.path().extension() != ".eig") continue;
        const std::string digits = name.substr(prefix.size(), name.size() - prefix.size() - 4);
        if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit)) continue;
        const int stored = std::stoi(digits);
        if (stored >= k && (best == 0 || stored < best)) best = stored;
      }
      if (best > 0) found = load_spectrum(spectrum_file(hash, best));
    }
    if (found && found->mesh_hash == hash && found->scheme == cfg_.area_scheme &&
        found->system.vertex_count() == mesh.vertex_count() && found->system.count() >= k) {
      std::lock_guard lock(mutex_);
      ++counters_.spectrum_cache_hits;
      const int stored = found->system.count();
      spectra_.emplace(std::make_pair(hash, stored), found->system);
      return stored == k ? found->system : found->system.truncated(k);
    }
  }

  EigenSystem es = solve_smallest(lap, k);
  if (cfg_.cache_dir) save_spectrum(spectrum_file(hash, k), {hash, cfg_.area_scheme, es});
  std::lock_guard lock(mutex_);
  ++counters_.eigensolves;
  spectra_.emplace(std::make_pair(hash, k), es);
  return es;
}

GsgwVector Pipeline::descriptor(const TriangleMesh& mesh) {
  const LaplacianPair lap = cotangent_weights(mesh, cfg_.area_scheme);
  const EigenSystem es = spectrum(mesh, lap, cfg_.k);
  const KernelConfig kernel = KernelConfig::from_spectrum(es, cfg_.resolution, cfg_.kernel, cfg_.area_factor);
  const SignatureMatrix sig = signature_matrix(es, kernel);
  return aggregate(sig, es.mass, cfg_.normalize_gsgw, mesh.content_hash());
}

const TriangleMesh& Pipeline::mesh_for(const std::filesystem::path& path) {
  const std::string key = path.string();
  {
    std::lock_guard lock(mutex_);
    if (auto it = meshes_.find(key); it != meshes_.end()) return it->second;
  }
  TriangleMesh mesh = load_mesh(path);
  std::lock_guard lock(mutex_);
  ++counters_.meshes_loaded;
  return meshes_.emplace(key, std::move(mesh)).first->second;
}

namespace {

std::optional<Eigen::VectorXd> read_descriptor(const std::filesystem::path& path, int length) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::string magic;
  int stored = 0;
  in >> magic >> stored;
  if (magic != "SGWGSGW1" || stored != length) throw IoError("'" + path.string() + "' is corrupt");
  Eigen::VectorXd values(length);
  std::string token;
  for (int i = 0; i < length; ++i) {
    if (!(in >> token)) throw IoError("'" + path.string() + "' is truncated");
    values[i] = csv::to_double(token, static_cast<std::size_t>(i + 2));
  }
  return values;
}

void write_descriptor(const std::filesystem::path& path, const Eigen::VectorXd& values) {
  const auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write cache file '" + tmp + "'");
    out << "SGWGSGW1 " << values.size() << '\n';
    for (Eigen::Index i = 0; i < values.size(); ++i) out << csv::exact(values[i]) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

Pipeline::ShapeOutcome Pipeline::process_shape(const std::filesystem::path& path) {
  const char* stage = "load";
  try {
    const TriangleMesh& mesh = mesh_for(path);
    const std::uint64_t hash = mesh.content_hash();
    const std::string key = descriptor_name(hash);

    stage = "cache";
    {
      std::lock_guard lock(mutex_);
      if (auto it = descriptors_.find(key); it != descriptors_.end()) {
        ++counters_.descriptor_cache_hits;
        return {it->second, {}};
      }
    }
    if (cfg_.cache_dir) {
      if (auto cached = read_descriptor(descriptor_file(hash), signature_length(cfg_.resolution))) {
        std::lock_guard lock(mutex_);
        ++counters_.descriptor_cache_hits;
        descriptors_.emplace(key, *cached);
        return {std::move(cached), {}};
      }
    }

    stage = "laplacian";
    const LaplacianPair lap = cotangent_weights(mesh, cfg_.area_scheme);
    stage = "eigen";
    const EigenSystem es = spectrum(mesh, lap, cfg_.k);
    stage = "signature";
    const KernelConfig kernel =
        KernelConfig::from_spectrum(es, cfg_.resolution, cfg_.kernel, cfg_.area_factor);
    const SignatureMatrix sig = signature_matrix(es, kernel);
    stage = "gsgw";
    const GsgwVector g = aggregate(sig, es.mass, cfg_.normalize_gsgw, hash);
    if (cfg_.cache_dir) write_descriptor(descriptor_file(hash), g.values);
    std::lock_guard lock(mutex_);
    descriptors_.emplace(key, g.values);
    return {g.values, {}};
  } catch (const Error& e) {
    return {std::nullopt, path.string() + " [" + stage + "] " + e.kind() + ": " + e.what()};
  } catch (const std::exception& e) {
    return {std::nullopt, path.string() + " [" + stage + "] " + e.what()};
  }
}

std::vector<StratumResult> Pipeline::run_group_comparison(const DatasetManifest& manifest) {
  validate(manifest);

  std::vector<std::string> paths;
  std::map<std::string, std::size_t> slot;
  for (const ManifestEntry& e : manifest.entries) {
    if (slot.emplace(e.path.string(), paths.size()).second) paths.push_back(e.path.string());
  }

  std::vector<ShapeOutcome> outcomes(paths.size());
  const int workers = std::clamp<int>(cfg_.jobs, 1, static_cast<int>(std::max<std::size_t>(1, paths.size())));
  auto work = [&](int worker) {
    for (std::size_t i = static_cast<std::size_t>(worker); i < paths.size(); i += workers)
      outcomes[i] = process_shape(paths[i]);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, w);
  }

  std::map<std::pair<std::string, Side>, std::vector<const ManifestEntry*>> strata;
  for (const ManifestEntry& e : manifest.entries) strata[{e.bone, e.side}].push_back(&e);

  std::vector<StratumResult> results;
  for (const auto& [key, members] : strata) {
    StratumResult result;
    result.bone = key.first;
    result.side = key.second;

    DataMatrix data;
    std::vector<Eigen::VectorXd> rows;
    for (const ManifestEntry* e : members) {
      result.subjects.push_back(e->subject);
      const ShapeOutcome& outcome = outcomes[slot.at(e->path.string())];
      if (!outcome.descriptor) {
        if (result.error.empty()) result.error = "shape " + e->subject + ": " + outcome.error;
        continue;
      }
      rows.push_back(*outcome.descriptor);
      data.labels.push_back(e->group);
      data.ids.push_back(e->subject);
    }

    if (result.error.empty()) {
      try {
        data.values.resize(static_cast<Eigen::Index>(rows.size()), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) data.values.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        split_groups(data);
        const int dims = effective_pca_dims(cfg_.pca_dims, data.cols(), data.rows());
        result.comparison = compare_groups(data, dims, cfg_.n_permutations, cfg_.seed, cfg_.jobs);
      } catch (const GroupCountError& e) {
        result.error = std::string("skipped: ") + e.what();
      } catch (const Error& e) {
        result.error = std::string("[stats] ") + e.kind() + ": " + e.what();
      }
    }
    results.push_back(std::move(result));
  }
  return results;
}

std::vector<SweepRow> Pipeline::parameter_sweep(const DatasetManifest& manifest,
                                                const std::vector<int>& resolutions,
                                                const std::vector<int>& ks) {
  if (resolutions.empty() || ks.empty()) throw InvalidParam("sweep grid is empty");
  for (int r : resolutions) signature_length(r);
  for (int k : ks) {
    if (k < 2) throw InvalidParam("sweep k values must be >= 2");
  }

  const RunConfig saved = cfg_;
  std::vector<SweepRow> rows;
  for (int r : resolutions) {
    for (int k : ks) {
      cfg_.resolution = r;
      cfg_.k = k;
      for (StratumResult& s : run_group_comparison(manifest)) rows.push_back({r, k, std::move(s)});
    }
  }
  cfg_ = saved;
  return rows;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string flags_of(const StratumResult& r) {
  std::string flags;
  if (r.manova_significant()) flags += "manova_significant";
  if (r.permutation_significant()) flags += std::string(flags.empty() ? "" : ";") + "permutation_significant";
  return flags;
}

}  // namespace

void write_report_csv(const std::vector<StratumResult>& results, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "bone,side,group1,group2,n1,n2,wilks_lambda,manova_p,permutation_p,pca_dims,"
         "n_permutations,seed,flags,error\n";
  for (const StratumResult& r : results) {
    out << csv::escape(r.bone) << ',' << to_string(r.side) << ',';
    if (r.comparison) {
      const GroupComparison& c = *r.comparison;
      out << csv::escape(c.first_label) << ',' << csv::escape(c.second_label) << ',' << c.first_size
          << ',' << c.second_size << ',' << csv::exact(c.wilks_lambda) << ','
          << csv::exact(c.manova_p) << ',' << csv::exact(c.permutation_p) << ',' << c.pca_dims << ','
          << c.n_permutations << ',' << c.seed << ',';
    } else {
      out << ",,,,,,,,,,";
    }
    out << flags_of(r) << ',' << csv::escape(r.error) << '\n';
  }
}

void write_report_json(const std::vector<StratumResult>& results, const RunConfig& cfg,
                       const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["config"] = {{"k", cfg.k},
                   {"resolution", cfg.resolution},
                   {"signature_length", signature_length(cfg.resolution)},
                   {"pca_dims", cfg.pca_dims},
                   {"n_permutations", cfg.n_permutations},
                   {"seed", cfg.seed},
                   {"kernel", kernel_id(cfg.kernel)},
                   {"area_scheme", to_string(cfg.area_scheme)},
                   {"area_factor", cfg.area_factor},
                   {"normalize_gsgw", cfg.normalize_gsgw}};
  auto strata = nlohmann::ordered_json::array();
  for (const StratumResult& r : results) {
    nlohmann::ordered_json row;
    row["bone"] = r.bone;
    row["side"] = to_string(r.side);
    row["subjects"] = r.subjects;
    if (r.comparison) {
      const GroupComparison& c = *r.comparison;
      row["groups"] = {c.first_label, c.second_label};
      row["sizes"] = {c.first_size, c.second_size};
      row["wilks_lambda"] = c.wilks_lambda;
      row["manova_p"] = c.manova_p;
      row["permutation_p"] = c.permutation_p;
      row["pca_dims"] = c.pca_dims;
      row["n_permutations"] = c.n_permutations;
      row["seed"] = c.seed;
      row["manova_significant"] = r.manova_significant();
      row["permutation_significant"] = r.permutation_significant();
    } else {
      row["error"] = r.error;
    }
    strata.push_back(std::move(row));
  }
  doc["strata"] = std::move(strata);

  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

std::string format_summary(const std::vector<StratumResult>& results) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %-6s %6s %12s %12s %12s\n", "bone", "side", "dims",
                "wilks", "manova_p", "perm_p");
  out << line;
  for (const StratumResult& r : results) {
    if (!r.comparison) {
      std::snprintf(line, sizeof(line), "%-16s %-6s  error: ", r.bone.c_str(), to_string(r.side));
      out << line << r.error << '\n';
      continue;
    }
    const GroupComparison& c = *r.comparison;
    char manova[32];
    char perm[32];
    std::snprintf(manova, sizeof(manova), "%.4g%s", c.manova_p, r.manova_significant() ? "*" : " ");
    std::snprintf(perm, sizeof(perm), "%.4g%s", c.permutation_p, r.permutation_significant() ? "*" : " ");
    std::snprintf(line, sizeof(line), "%-16s %-6s %6d %12.5g %12s %12s\n", r.bone.c_str(),
                  to_string(r.side), c.pca_dims, c.wilks_lambda, manova, perm);
    out << line;
  }
  out << "(* p < " << kSignificanceLevel << ")\n";
  return out.str();
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "R,k,bone,side,wilks_lambda,manova_p,permutation_p,pca_dims,error\n";
  for (const SweepRow& row : rows) {
    const StratumResult& r = row.result;
    out << row.resolution << ',' << row.k << ',' << csv::escape(r.bone) << ',' << to_string(r.side)
        << ',';
    if (r.comparison) {
      out << csv::exact(r.comparison->wilks_lambda) << ',' << csv::exact(r.comparison->manova_p) << ','
          << csv::exact(r.comparison->permutation_p) << ',' << r.comparison->pca_dims << ',';
    } else {
      out << ",,,,";
    }
    out << csv::escape(r.error) << '\n';
  }
}

DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir,
                                        const SyntheticDatasetSpec& spec) {
  if (spec.per_group < 2) throw InvalidParam("synthetic groups need at least 2 shapes");
  std::filesystem::create_directories(dir);

  DatasetManifest manifest;
  manifest.root = std::filesystem::absolute(dir);
  const std::string first = spec.null_model ? "A" : "sphere";
  const std::string second = spec.null_model ? "B" : "ellipsoid";
  for (int i = 0; i < 2 * spec.per_group; ++i) {
    const bool in_second = i >= spec.per_group;
    SyntheticParams params;
    params.amplitude = spec.amplitude;
    SyntheticKind kind = SyntheticKind::bumpy_sphere;
    if (in_second && !spec.null_model) {
      kind = SyntheticKind::ellipsoid;
      params.axes = spec.second_axes;
    }
    const TriangleMesh mesh =
        make_synthetic(kind, spec.subdivisions, params, substream_seed(spec.seed, static_cast<std::uint64_t>(i)));
    char name[32];
    std::snprintf(name, sizeof(name), "shape_%03d.off", i);
    write_off(mesh, manifest.root / name);
    manifest.entries.push_back({manifest.root / name, "s" + std::to_string(i),
                                in_second ? second : first, spec.bone, spec.side});
  }
  write_manifest(manifest, manifest.root / "manifest.csv");
  return manifest;
}

}  // namespace sgw

// sgwtool: command-line front end for the spectral wavelet shape pipeline.

#include "sgw/csv.hpp"
#include "sgw/eigen_solver.hpp"
#include "sgw/error.hpp"
#include "sgw/gsgw.hpp"
#include "sgw/laplacian.hpp"
#include "sgw/mesh.hpp"
#include "sgw/pipeline.hpp"
#include "sgw/plot.hpp"
#include "sgw/reconstruct.hpp"
#include "sgw/sgws.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

namespace fs = std::filesystem;
using namespace sgw;

namespace {

const std::map<std::string, KernelKind> kKernels = {{"mexican_hat", KernelKind::mexican_hat},
                                                    {"mexican_hat_squared", KernelKind::mexican_hat_squared}};
const std::map<std::string, AreaScheme> kSchemes = {{"mixed_voronoi", AreaScheme::mixed_voronoi},
                                                    {"barycentric", AreaScheme::barycentric}};
const std::map<std::string, EigenMethod> kMethods = {
    {"auto", EigenMethod::automatic}, {"sparse", EigenMethod::sparse}, {"dense", EigenMethod::dense}};

struct Options {
  RunConfig run;
  std::string cache_dir;
  bool no_area_factor = false;

  fs::path mesh;
  std::vector<std::string> meshes;
  fs::path manifest;
  fs::path out;
  std::string label;

  EigenMethod method = EigenMethod::automatic;
  double tolerance = 1e-10;
  bool write_coo = false;

  std::string ks_spec = "1:50";
  bool unweighted = false;

  std::vector<int> sweep_rs{1, 2, 5, 10, 20, 30};
  std::vector<int> sweep_ks{10, 20, 31};

  std::string synth_kind = "unit_sphere";
  int subdivisions = 3;
  std::vector<double> axes{1.0, 1.0, 1.0};
  double amplitude = 0.0;
  std::uint64_t synth_seed = 0;
  std::string dataset_dir;
  int per_group = 10;
  bool null_model = false;

  std::string plot_nmse;
  std::string plot_gsgw;
  std::string plot_sweep;
  std::string plot_value = "manova_p";
  std::string plot_bone;
  std::string plot_side;
};

void add_spectral(CLI::App* cmd, Options& o, int min_k = 2) {
  cmd->add_option("--k", o.run.k, "Number of eigenpairs")->check(CLI::Range(min_k, 100000))->capture_default_str();
  cmd->add_option("--area-scheme", o.run.area_scheme, "Vertex area scheme")
      ->transform(CLI::CheckedTransformer(kSchemes, CLI::ignore_case))
      ->default_str("mixed_voronoi");
  cmd->add_option("--cache-dir", o.cache_dir, "Directory for cached spectra and descriptors");
}

void add_signature(CLI::App* cmd, Options& o) {
  cmd->add_option("--R", o.run.resolution, "Wavelet resolution R")
      ->check(CLI::Range(1, 1000))
      ->capture_default_str();
  cmd->add_option("--kernel", o.run.kernel, "Band-pass kernel")
      ->transform(CLI::CheckedTransformer(kKernels, CLI::ignore_case))
      ->default_str("mexican_hat");
  cmd->add_flag("--no-area-factor", o.no_area_factor, "Drop the a_j^2 factor from coefficients");
}

void add_stats(CLI::App* cmd, Options& o) {
  cmd->add_option("--pca", o.run.pca_dims, "PCA dimensions before MANOVA")
      ->check(CLI::Range(1, 100000))
      ->capture_default_str();
  cmd->add_option("--perms", o.run.n_permutations, "Permutation replicates")
      ->check(CLI::Range(1, 100000000))
      ->capture_default_str();
  cmd->add_option("--seed", o.run.seed, "Permutation seed")->capture_default_str();
  cmd->add_flag("--normalize-gsgw", o.run.normalize_gsgw, "Divide GSGW vectors by surface area");
  cmd->add_option("--jobs", o.run.jobs, "Worker threads")->check(CLI::Range(1, 256))->capture_default_str();
}

RunConfig resolved(const Options& o) {
  RunConfig cfg = o.run;
  cfg.area_factor = !o.no_area_factor;
  if (!o.cache_dir.empty()) cfg.cache_dir = fs::path(o.cache_dir);
  return cfg;
}

void print_config(const std::string& command, const std::string& body) {
  std::cout << "== sgwtool " << command << "\n" << body << "==\n";
}

fs::path out_dir(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path(".") : o.out;
  fs::create_directories(dir);
  return dir;
}

/// "a:b" (inclusive) or "a,b,c".
std::vector<int> parse_ks(const std::string& spec) {
  std::vector<int> ks;
  try {
    if (const auto colon = spec.find(':'); colon != std::string::npos) {
      const int lo = std::stoi(spec.substr(0, colon));
      const int hi = std::stoi(spec.substr(colon + 1));
      if (lo < 1 || hi < lo) throw InvalidParam("--ks range must satisfy 1 <= a <= b");
      for (int k = lo; k <= hi; ++k) ks.push_back(k);
    } else {
      for (const std::string& field : csv::split(spec)) ks.push_back(std::stoi(field));
    }
  } catch (const std::logic_error&) {
    throw InvalidParam("cannot parse --ks '" + spec + "'");
  }
  if (ks.empty()) throw InvalidParam("--ks is empty");
  return ks;
}

void write_eigen_outputs(const EigenSystem& es, const fs::path& dir) {
  std::ofstream values(dir / "eigenvalues.csv");
  values << "index,eigenvalue\n";
  for (int l = 0; l < es.count(); ++l) values << l + 1 << ',' << csv::exact(es.eigenvalues[l]) << '\n';

  std::ofstream functions(dir / "eigenfunctions.csv");
  for (int l = 0; l < es.count(); ++l) functions << (l ? "," : "") << "phi_" << l + 1;
  functions << '\n';
  for (int i = 0; i < es.vertex_count(); ++i) {
    for (int l = 0; l < es.count(); ++l) functions << (l ? "," : "") << csv::exact(es.eigenfunctions(i, l));
    functions << '\n';
  }

  std::ofstream mass(dir / "mass.csv");
  mass << "vertex,area\n";
  for (int i = 0; i < es.vertex_count(); ++i) mass << i << ',' << csv::exact(es.mass[i]) << '\n';
  if (!values || !functions || !mass) throw IoError("cannot write outputs to '" + dir.string() + "'");
}

int cmd_eigen(const Options& o) {
  const RunConfig cfg = resolved(o);
  const fs::path dir = out_dir(o);
  const char* method = o.method == EigenMethod::dense ? "dense" : o.method == EigenMethod::sparse ? "sparse" : "auto";
  print_config("eigen", "mesh = " + o.mesh.string() + "\nk = " + std::to_string(cfg.k) +
                            "\narea_scheme = " + to_string(cfg.area_scheme) + "\nmethod = " + method +
                            "\ntolerance = " + csv::exact(o.tolerance) + "\nout = " + dir.string() + "\n");

  const TriangleMesh mesh = load_mesh(o.mesh);
  const LaplacianPair lap = cotangent_weights(mesh, cfg.area_scheme);
  if (o.write_coo) write_coo(lap, dir / "laplacian.coo");
  if (cfg.k > mesh.vertex_count())
    throw InvalidParam("k = " + std::to_string(cfg.k) + " exceeds the vertex count " +
                       std::to_string(mesh.vertex_count()));
  const EigenSystem es = solve_smallest(lap, cfg.k, {o.method, o.tolerance, 0});
  write_eigen_outputs(es, dir);
  std::printf("%d vertices, %d eigenpairs, lambda_2 = %.6g, lambda_k = %.6g\n", mesh.vertex_count(),
              es.count(), es.count() > 1 ? es.eigenvalues[1] : 0.0, es.eigenvalues[es.count() - 1]);
  return 0;
}

int cmd_signature(const Options& o) {
  const RunConfig cfg = resolved(o);
  const fs::path out = o.out.empty() ? fs::path("signature.csv") : o.out;
  print_config("signature", "mesh = " + o.mesh.string() + "\n" + describe(cfg) + "out = " + out.string() + "\n");

  Pipeline pipeline(cfg);
  const TriangleMesh mesh = load_mesh(o.mesh);
  const LaplacianPair lap = cotangent_weights(mesh, cfg.area_scheme);
  const EigenSystem es = pipeline.spectrum(mesh, lap, cfg.k);
  const KernelConfig kernel = KernelConfig::from_spectrum(es, cfg.resolution, cfg.kernel, cfg.area_factor);
  const SignatureMatrix sig = signature_matrix(es, kernel);
  write_signature_csv(sig, out);
  std::printf("signature matrix %d x %d written to %s\n", sig.length(), sig.vertex_count(), out.string().c_str());
  return 0;
}

int cmd_gsgw(const Options& o) {
  const RunConfig cfg = resolved(o);
  const fs::path out = o.out.empty() ? fs::path("gsgw.csv") : o.out;
  std::vector<std::pair<fs::path, std::pair<std::string, std::string>>> inputs;
  if (!o.manifest.empty()) {
    for (const ManifestEntry& e : load_manifest(o.manifest).entries)
      inputs.push_back({e.path, {e.subject, e.group}});
  }
  for (const std::string& m : o.meshes) inputs.push_back({m, {fs::path(m).stem().string(), o.label}});
  if (inputs.empty()) throw ValidationError("no meshes given (pass mesh paths or --manifest)");
  print_config("gsgw", "inputs = " + std::to_string(inputs.size()) + "\n" + describe(cfg) + "out = " + out.string() + "\n");

  Pipeline pipeline(cfg);
  std::vector<GsgwRow> rows;
  for (const auto& [path, id] : inputs) {
    const GsgwVector g = pipeline.descriptor(load_mesh(path));
    rows.push_back({id.first, id.second, g.values});
  }
  write_gsgw_csv(rows, out);
  std::printf("%zu descriptors of length %d written to %s\n", rows.size(), signature_length(cfg.resolution),
              out.string().c_str());
  return 0;
}

int cmd_reconstruct(const Options& o) {
  const RunConfig cfg = resolved(o);
  const fs::path dir = out_dir(o);
  print_config("reconstruct", "mesh = " + o.mesh.string() + "\nk = " + std::to_string(cfg.k) + "\nks = " +
                                  o.ks_spec + "\narea_scheme = " + to_string(cfg.area_scheme) +
                                  "\nnmse_weights = " + (o.unweighted ? "uniform" : "area") +
                                  "\nout = " + dir.string() + "\n");

  const TriangleMesh mesh = load_mesh(o.mesh);
  std::vector<int> ks = parse_ks(o.ks_spec);
  const int needed = std::max(cfg.k, *std::max_element(ks.begin(), ks.end()));
  if (needed > mesh.vertex_count())
    throw InvalidParam("basis size " + std::to_string(needed) + " exceeds the vertex count " +
                       std::to_string(mesh.vertex_count()));
  RunConfig spectral = cfg;
  spectral.k = std::max(2, needed);
  Pipeline pipeline(spectral);
  const LaplacianPair lap = cotangent_weights(mesh, cfg.area_scheme);
  const EigenSystem es = pipeline.spectrum(mesh, lap, needed);

  const ReconstructionReport report = nmse_curve(mesh, es, ks, !o.unweighted);
  write_nmse_csv(report, dir / "nmse.csv");
  const fs::path off = dir / ("reconstruction_k" + std::to_string(cfg.k) + ".off");
  write_off(spectral_reconstruct(mesh, es, cfg.k), off);
  std::printf("NMSE(%d) = %.6g, NMSE(%d) = %.6g; reconstruction written to %s\n", report.ks.front(),
              report.nmse.front(), report.ks.back(), report.nmse.back(), off.string().c_str());
  return 0;
}

void warn_pca(const RunConfig& cfg, const DatasetManifest& manifest) {
  std::map<std::pair<std::string, Side>, int> sizes;
  for (const ManifestEntry& e : manifest.entries) ++sizes[{e.bone, e.side}];
  for (const auto& [key, n] : sizes) {
    if (2 * cfg.pca_dims > n) {
      std::fprintf(stderr,
                   "warning: %s/%s has n = %d shapes; pca = %d exceeds n/2, so the MANOVA F test has "
                   "few denominator degrees of freedom\n",
                   key.first.c_str(), to_string(key.second), n, cfg.pca_dims);
    }
  }
}

int cmd_compare(const Options& o) {
  const RunConfig cfg = resolved(o);
  const fs::path dir = out_dir(o);
  print_config("compare", "manifest = " + o.manifest.string() + "\n" + describe(cfg) + "out = " + dir.string() + "\n");

  const DatasetManifest manifest = load_manifest(o.manifest);
  warn_pca(cfg, manifest);
  Pipeline pipeline(cfg);
  const std::vector<StratumResult> results = pipeline.run_group_comparison(manifest);
  write_report_json(results, cfg, dir / "report.json");
  write_report_csv(results, dir / "report.csv");
  std::cout << format_summary(results);
  const PipelineCounters& c = pipeline.counters();
  std::printf("eigensolves: %d, spectrum cache hits: %d, descriptor cache hits: %d\n", c.eigensolves,
              c.spectrum_cache_hits, c.descriptor_cache_hits);

  bool any_ok = false;
  for (const StratumResult& r : results) any_ok = any_ok || r.comparison.has_value();
  if (!any_ok) {
    std::fprintf(stderr, "error: no stratum could be compared\n");
    return 3;
  }
  return 0;
}

int cmd_sweep(const Options& o) {
  const RunConfig cfg = resolved(o);
  const fs::path out = o.out.empty() ? fs::path("sweep.csv") : o.out;
  std::string grid = "R values =";
  for (int r : o.sweep_rs) grid += " " + std::to_string(r);
  grid += "\nk values =";
  for (int k : o.sweep_ks) grid += " " + std::to_string(k);
  print_config("sweep", "manifest = " + o.manifest.string() + "\n" + grid + "\n" + describe(cfg) +
                            "out = " + out.string() + "\n");

  const DatasetManifest manifest = load_manifest(o.manifest);
  warn_pca(cfg, manifest);
  Pipeline pipeline(cfg);
  const std::vector<SweepRow> rows = pipeline.parameter_sweep(manifest, o.sweep_rs, o.sweep_ks);
  write_sweep_csv(rows, out);
  std::printf("%zu sweep rows written to %s (%d eigensolves)\n", rows.size(), out.string().c_str(),
              pipeline.counters().eigensolves);
  return 0;
}

int cmd_synth(const Options& o) {
  if (o.axes.size() != 3) throw InvalidParam("--axes needs three values");
  const Vec3 axes(o.axes[0], o.axes[1], o.axes[2]);
  if (!o.dataset_dir.empty()) {
    SyntheticDatasetSpec spec;
    spec.per_group = o.per_group;
    spec.subdivisions = o.subdivisions;
    spec.amplitude = o.amplitude > 0.0 ? o.amplitude : spec.amplitude;
    if (axes != Vec3::Ones()) spec.second_axes = axes;
    spec.null_model = o.null_model;
    spec.seed = o.synth_seed;
    char body[256];
    std::snprintf(body, sizeof(body),
                  "dataset = %s\nper_group = %d\nsubdivisions = %d\namplitude = %g\nsecond_axes = %g,%g,%g\n"
                  "null_model = %s\nseed = %llu\n",
                  o.dataset_dir.c_str(), spec.per_group, spec.subdivisions, spec.amplitude,
                  spec.second_axes.x(), spec.second_axes.y(), spec.second_axes.z(),
                  spec.null_model ? "yes" : "no", static_cast<unsigned long long>(spec.seed));
    print_config("synth", body);
    const DatasetManifest manifest = write_synthetic_dataset(o.dataset_dir, spec);
    std::printf("%zu meshes and manifest.csv written to %s\n", manifest.entries.size(), o.dataset_dir.c_str());
    return 0;
  }

  const auto kind = parse_synthetic_kind(o.synth_kind);
  if (!kind) throw InvalidParam("unknown --kind '" + o.synth_kind + "'");
  const fs::path out = o.out.empty() ? fs::path(o.synth_kind + ".off") : o.out;
  char body[256];
  std::snprintf(body, sizeof(body), "kind = %s\nsubdivisions = %d\naxes = %g,%g,%g\namplitude = %g\nseed = %llu\nout = %s\n",
                o.synth_kind.c_str(), o.subdivisions, axes.x(), axes.y(), axes.z(), o.amplitude,
                static_cast<unsigned long long>(o.synth_seed), out.string().c_str());
  print_config("synth", body);
  const TriangleMesh mesh = make_synthetic(*kind, o.subdivisions, {axes, o.amplitude}, o.synth_seed);
  write_off(mesh, out);
  std::printf("%d vertices, %d triangles written to %s\n", mesh.vertex_count(), mesh.triangle_count(),
              out.string().c_str());
  return 0;
}

int cmd_plot(const Options& o) {
  const int sources = !o.plot_nmse.empty() + !o.plot_gsgw.empty() + !o.plot_sweep.empty();
  if (sources != 1) throw ValidationError("give exactly one of --nmse, --gsgw, --sweep");
  const fs::path out = o.out.empty() ? fs::path("plot.svg") : o.out;
  std::string body = "out = " + out.string() + "\n";
  std::string svg;
  if (!o.plot_nmse.empty()) {
    print_config("plot", "nmse = " + o.plot_nmse + "\n" + body);
    svg = plot::render_svg(plot::nmse_chart(o.plot_nmse));
  } else if (!o.plot_gsgw.empty()) {
    print_config("plot", "gsgw = " + o.plot_gsgw + "\n" + body);
    svg = plot::render_svg(plot::gsgw_chart(o.plot_gsgw));
  } else {
    print_config("plot", "sweep = " + o.plot_sweep + "\nvalue = " + o.plot_value + "\n" + body);
    svg = plot::render_svg(plot::sweep_heatmap(o.plot_sweep, o.plot_value, o.plot_bone, o.plot_side));
  }
  plot::write_text(svg, out);
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

void report_error(bool as_json, const std::string& kind, const std::string& message, int code) {
  if (as_json) {
    nlohmann::ordered_json doc;
    doc["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << doc.dump() << '\n';
  } else {
    std::cerr << "error: " << kind << ": " << message << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral graph wavelet shape descriptors and two-group shape statistics"};
  app.require_subcommand(1);
  app.allow_extras(false);
  bool error_json = false;
  app.add_flag("--error-json", error_json, "Report errors as a JSON object on stderr");

  Options o;

  auto* eigen = app.add_subcommand("eigen", "Laplace-Beltrami eigenpairs of one mesh");
  eigen->add_option("mesh", o.mesh, "Mesh file (.off, .obj, .ply)")->required();
  add_spectral(eigen, o, 1);
  eigen->add_option("--out", o.out, "Output directory")->default_str(".");
  eigen->add_option("--method", o.method, "Eigensolver")
      ->transform(CLI::CheckedTransformer(kMethods, CLI::ignore_case))
      ->default_str("auto");
  eigen->add_option("--tolerance", o.tolerance, "Residual tolerance")->capture_default_str();
  eigen->add_flag("--coo", o.write_coo, "Also write the stiffness and mass matrices (laplacian.coo)");

  auto* signature = app.add_subcommand("signature", "Per-vertex wavelet signatures of one mesh");
  signature->add_option("mesh", o.mesh, "Mesh file")->required();
  add_spectral(signature, o);
  add_signature(signature, o);
  signature->add_option("--out", o.out, "Output CSV (p rows, m columns)")->default_str("signature.csv");

  auto* gsgw = app.add_subcommand("gsgw", "Global descriptors of several meshes");
  gsgw->add_option("meshes", o.meshes, "Mesh files");
  gsgw->add_option("--manifest", o.manifest, "Manifest CSV instead of (or in addition to) mesh paths");
  gsgw->add_option("--label", o.label, "Label written for mesh paths given directly");
  add_spectral(gsgw, o);
  add_signature(gsgw, o);
  gsgw->add_flag("--normalize-gsgw", o.run.normalize_gsgw, "Divide GSGW vectors by surface area");
  gsgw->add_option("--out", o.out, "Output CSV")->default_str("gsgw.csv");

  auto* reconstruct = app.add_subcommand("reconstruct", "Spectral reconstruction and NMSE curve");
  reconstruct->add_option("mesh", o.mesh, "Mesh file")->required();
  add_spectral(reconstruct, o, 1);
  reconstruct->add_option("--ks", o.ks_spec, "Basis sizes for the NMSE curve, 'a:b' or 'a,b,c'")
      ->capture_default_str();
  reconstruct->add_flag("--unweighted", o.unweighted, "NMSE with uniform vertex weights");
  reconstruct->add_option("--out", o.out, "Output directory")->default_str(".");

  auto* compare = app.add_subcommand("compare", "Two-group comparison per (bone, side) stratum");
  compare->add_option("manifest", o.manifest, "Manifest CSV (path,subject,group,bone,side)")->required();
  add_spectral(compare, o);
  add_signature(compare, o);
  add_stats(compare, o);
  compare->add_option("--out", o.out, "Output directory for report.json and report.csv")->default_str(".");

  auto* sweep = app.add_subcommand("sweep", "Comparison over a grid of R and k");
  sweep->add_option("manifest", o.manifest, "Manifest CSV")->required();
  add_spectral(sweep, o);
  add_signature(sweep, o);
  add_stats(sweep, o);
  sweep->add_option("--Rs", o.sweep_rs, "Resolutions")->delimiter(',')->capture_default_str();
  sweep->add_option("--ks", o.sweep_ks, "Eigenpair counts")->delimiter(',')->capture_default_str();
  sweep->add_option("--out", o.out, "Output CSV")->default_str("sweep.csv");

  auto* synth = app.add_subcommand("synth", "Synthetic meshes and two-group datasets");
  synth->add_option("--kind", o.synth_kind, "unit_sphere, ellipsoid or bumpy_sphere")->capture_default_str();
  synth->add_option("--subdivisions", o.subdivisions, "Icosphere subdivisions")->capture_default_str();
  synth->add_option("--axes", o.axes, "Ellipsoid semi-axes a,b,c")->delimiter(',')->expected(3);
  synth->add_option("--amplitude", o.amplitude, "Radial bump amplitude")->capture_default_str();
  synth->add_option("--seed", o.synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", o.out, "Output OFF file");
  synth->add_option("--dataset", o.dataset_dir, "Write a two-group dataset with manifest.csv here");
  synth->add_option("--per-group", o.per_group, "Shapes per group (dataset mode)")->capture_default_str();
  synth->add_flag("--null", o.null_model, "Both groups from the same distribution (dataset mode)");

  auto* plot = app.add_subcommand("plot", "Static SVG plots from pipeline CSV files");
  plot->add_option("--nmse", o.plot_nmse, "nmse.csv from 'reconstruct'");
  plot->add_option("--gsgw", o.plot_gsgw, "gsgw.csv from 'gsgw'");
  plot->add_option("--sweep", o.plot_sweep, "sweep.csv from 'sweep'");
  plot->add_option("--value", o.plot_value, "Sweep column to map")->capture_default_str();
  plot->add_option("--bone", o.plot_bone, "Sweep stratum bone (default: first)");
  plot->add_option("--side", o.plot_side, "Sweep stratum side (default: first)");
  plot->add_option("--out", o.out, "Output SVG")->default_str("plot.svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(error_json, "UsageError", e.what(), 2);
    return 2;
  }

  try {
    if (*eigen) return cmd_eigen(o);
    if (*signature) return cmd_signature(o);
    if (*gsgw) return cmd_gsgw(o);
    if (*reconstruct) return cmd_reconstruct(o);
    if (*compare) return cmd_compare(o);
    if (*sweep) return cmd_sweep(o);
    if (*synth) return cmd_synth(o);
    if (*plot) return cmd_plot(o);
  } catch (const Error& e) {
    const int code = is_input_error(e) ? 2 : 3;
    report_error(error_json, e.kind(), e.what(), code);
    return code;
  } catch (const fs::filesystem_error& e) {
    report_error(error_json, "IoError", e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    report_error(error_json, "InternalError", e.what(), 3);
    return 3;
  }
  return 2;
}

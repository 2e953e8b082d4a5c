#include "sgw/sgws.hpp"

#include "sgw/error.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <unistd.h>

namespace sgw {

const char* kernel_id(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::mexican_hat: return "mexican_hat";
    case KernelKind::mexican_hat_squared: return "mexican_hat_squared";
  }
  return "unknown";
}

std::optional<KernelKind> parse_kernel(const std::string& id) {
  if (id == "mexican_hat") return KernelKind::mexican_hat;
  if (id == "mexican_hat_squared") return KernelKind::mexican_hat_squared;
  return std::nullopt;
}

double mexican_hat(double x) { return x * std::exp(-x); }

double evaluate_kernel(KernelKind kind, double x) {
  switch (kind) {
    case KernelKind::mexican_hat: return mexican_hat(x);
    case KernelKind::mexican_hat_squared: return x * x * std::exp(-x * x);
  }
  return 0.0;
}

double kernel_peak(KernelKind kind) {
  // Both kernels peak at x = 1.
  return evaluate_kernel(kind, 1.0);
}

int signature_length(int resolution) {
  if (resolution < 1) throw InvalidParam("resolution must be >= 1");
  return (resolution + 1) * (resolution + 2) / 2 - 1;
}

KernelConfig KernelConfig::with_bounds(double lambda_min, double lambda_max, int resolution,
                                       KernelKind kernel, bool area_factor) {
  if (resolution < 1) throw InvalidParam("resolution must be >= 1");
  if (!(lambda_min > 0.0) || !(lambda_min < lambda_max) || !std::isfinite(lambda_max)) {
    throw InvalidParam("spectrum bounds must satisfy 0 < lambda_min < lambda_max (got " +
                       std::to_string(lambda_min) + ", " + std::to_string(lambda_max) + ")");
  }
  KernelConfig cfg;
  cfg.resolution = resolution;
  cfg.kernel = kernel;
  cfg.gamma = kernel_peak(kernel);
  cfg.lambda_min = lambda_min;
  cfg.lambda_max = lambda_max;
  cfg.area_factor = area_factor;
  return cfg;
}

KernelConfig KernelConfig::from_spectrum(const EigenSystem& es, int resolution, KernelKind kernel,
                                         bool area_factor) {
  const auto [lmin, lmax] = spectrum_bounds(es);
  return with_bounds(lmin, lmax, resolution, kernel, area_factor);
}

double scaling_kernel(double x, const KernelConfig& cfg) {
  const double u = x / (0.6 * cfg.lambda_min);
  const double u2 = u * u;
  return cfg.gamma * std::exp(-(u2 * u2));
}

std::vector<double> wavelet_scales(int levels, double lambda_min, double lambda_max) {
  if (levels < 1) throw InvalidParam("number of scales must be >= 1");
  if (!(lambda_min > 0.0) || !(lambda_min < lambda_max))
    throw InvalidParam("wavelet scales need 0 < lambda_min < lambda_max");
  const double first = std::log(2.0 / lambda_min);
  const double last = std::log(2.0 / lambda_max);
  std::vector<double> scales(static_cast<std::size_t>(levels));
  scales[0] = 2.0 / lambda_min;
  for (int k = 1; k < levels; ++k) {
    scales[k] = std::exp(first + static_cast<double>(k) / (levels - 1) * (last - first));
  }
  if (levels > 1) scales.back() = 2.0 / lambda_max;
  return scales;
}

namespace {

/// p x k matrix of filter responses, one row per signature entry.
Eigen::MatrixXd filter_bank(const EigenSystem& es, const KernelConfig& cfg) {
  const int k = es.count();
  Eigen::MatrixXd bank(cfg.length(), k);
  Eigen::Index row = 0;
  for (int level = 1; level <= cfg.resolution; ++level) {
    for (double t : wavelet_scales(level, cfg.lambda_min, cfg.lambda_max)) {
      for (int l = 0; l < k; ++l) bank(row, l) = evaluate_kernel(cfg.kernel, t * es.eigenvalues[l]);
      ++row;
    }
    for (int l = 0; l < k; ++l) bank(row, l) = scaling_kernel(es.eigenvalues[l], cfg);
    ++row;
  }
  return bank;
}

void signature_column(const EigenSystem& es, const KernelConfig& cfg, const Eigen::MatrixXd& bank,
                      int vertex, double* out) {
  const int k = es.count();
  double squares[512];
  std::vector<double> heap;
  double* sq = squares;
  if (k > 512) {
    heap.resize(static_cast<std::size_t>(k));
    sq = heap.data();
  }
  for (int l = 0; l < k; ++l) {
    const double phi = es.eigenfunctions(vertex, l);
    sq[l] = phi * phi;
  }
  const double area = es.mass[vertex];
  const double weight = cfg.area_factor ? area * area : 1.0;
  for (Eigen::Index r = 0; r < bank.rows(); ++r) {
    double sum = 0.0;
    for (int l = 0; l < k; ++l) sum += bank(r, l) * sq[l];
    out[r] = weight * sum;
  }
}

void check_inputs(const EigenSystem& es, const KernelConfig& cfg) {
  if (es.count() < 2) throw InvalidParam("signatures need at least 2 eigenpairs");
  if (cfg.resolution < 1) throw InvalidParam("resolution must be >= 1");
  if (!(cfg.lambda_min > 0.0) || !(cfg.lambda_min < cfg.lambda_max))
    throw InvalidParam("kernel config has invalid spectrum bounds");
}

}  // namespace

Eigen::VectorXd vertex_signature(const EigenSystem& es, const KernelConfig& cfg, int vertex) {
  check_inputs(es, cfg);
  if (vertex < 0 || vertex >= es.vertex_count())
    throw InvalidParam("vertex index " + std::to_string(vertex) + " out of range");
  const Eigen::MatrixXd bank = filter_bank(es, cfg);
  Eigen::VectorXd out(bank.rows());
  signature_column(es, cfg, bank, vertex, out.data());
  return out;
}

SignatureMatrix signature_matrix(const EigenSystem& es, const KernelConfig& cfg) {
  check_inputs(es, cfg);
  const Eigen::MatrixXd bank = filter_bank(es, cfg);
  SignatureMatrix sig;
  sig.resolution = cfg.resolution;
  sig.values.resize(bank.rows(), es.vertex_count());
  for (int j = 0; j < es.vertex_count(); ++j) signature_column(es, cfg, bank, j, sig.values.col(j).data());
  return sig;
}

void write_signature_csv(const SignatureMatrix& sig, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  char buf[32];
  for (Eigen::Index r = 0; r < sig.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < sig.values.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.12g", sig.values(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

namespace {

constexpr char kSigMagic[8] = {'S', 'G', 'W', 'S', 'I', 'G', 0, 0};
constexpr std::uint32_t kSigVersion = 1;

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

void save_signature(const std::filesystem::path& path, const SignatureKey& key,
                    const SignatureMatrix& sig) {
  const auto tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write cache file '" + tmp + "'");
    out.write(kSigMagic, sizeof(kSigMagic));
    put(out, kSigVersion);
    put(out, key.mesh_hash);
    put(out, static_cast<std::uint32_t>(key.k));
    put(out, static_cast<std::uint32_t>(key.resolution));
    put(out, static_cast<std::uint32_t>(key.kernel.size()));
    out.write(key.kernel.data(), static_cast<std::streamsize>(key.kernel.size()));
    put(out, static_cast<std::uint8_t>(key.area_factor ? 1 : 0));
    put(out, static_cast<std::uint32_t>(sig.values.rows()));
    put(out, static_cast<std::uint32_t>(sig.values.cols()));
    out.write(reinterpret_cast<const char*>(sig.values.data()),
              static_cast<std::streamsize>(sizeof(double) * sig.values.size()));
    if (!out) throw IoError("short write to cache file '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::optional<SignatureMatrix> load_signature(const std::filesystem::path& path,
                                              const SignatureKey& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kSigMagic, sizeof(kSigMagic)) != 0)
    throw IoError("'" + path.string() + "' is not a signature cache file");
  if (get<std::uint32_t>(in) != kSigVersion)
    throw IoError("'" + path.string() + "' has an unsupported cache version");

  SignatureKey stored;
  stored.mesh_hash = get<std::uint64_t>(in);
  stored.k = static_cast<int>(get<std::uint32_t>(in));
  stored.resolution = static_cast<int>(get<std::uint32_t>(in));
  const auto id_len = get<std::uint32_t>(in);
  if (!in || id_len > 256) throw IoError("'" + path.string() + "' has a corrupt header");
  stored.kernel.resize(id_len);
  in.read(stored.kernel.data(), id_len);
  stored.area_factor = get<std::uint8_t>(in) != 0;
  const auto rows = get<std::uint32_t>(in);
  const auto cols = get<std::uint32_t>(in);
  if (!in) throw IoError("'" + path.string() + "' has a corrupt header");
  if (!(stored == key)) return std::nullopt;
  if (static_cast<int>(rows) != signature_length(key.resolution))
    throw IoError("'" + path.string() + "' has an inconsistent signature length");

  SignatureMatrix sig;
  sig.resolution = key.resolution;
  sig.values.resize(rows, cols);
  in.read(reinterpret_cast<char*>(sig.values.data()),
          static_cast<std::streamsize>(sizeof(double) * rows * cols));
  if (!in) throw IoError("'" + path.string() + "' is truncated");
  return sig;
}

}  // namespace sgw

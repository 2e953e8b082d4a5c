#pragma once

#include "sgw/eigen_solver.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sgw {

/// Band-pass generating kernels.
enum class KernelKind {
  /// g(x) = x exp(-x)
  mexican_hat,
  /// g(x) = x^2 exp(-x^2)
  mexican_hat_squared,
};

const char* kernel_id(KernelKind kind) noexcept;
std::optional<KernelKind> parse_kernel(const std::string& id);

double mexican_hat(double x);
double evaluate_kernel(KernelKind kind, double x);
/// max_{x >= 0} g(x); e^{-1} for both built-in kernels.
double kernel_peak(KernelKind kind);

/// Signature length (R+1)(R+2)/2 - 1.
int signature_length(int resolution);

struct KernelConfig {
  int resolution = 30;
  KernelKind kernel = KernelKind::mexican_hat;
  /// h(0); defaults to the kernel peak.
  double gamma = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  /// Multiply coefficients at vertex j by a_j^2.
  bool area_factor = true;

  int length() const { return signature_length(resolution); }

  /// Config with bounds (lambda_k/20, lambda_k) taken from `es`.
  static KernelConfig from_spectrum(const EigenSystem& es, int resolution,
                                    KernelKind kernel = KernelKind::mexican_hat,
                                    bool area_factor = true);
  /// Config with explicit bounds. Throws InvalidParam unless
  /// 0 < lambda_min < lambda_max and resolution >= 1.
  static KernelConfig with_bounds(double lambda_min, double lambda_max, int resolution,
                                  KernelKind kernel = KernelKind::mexican_hat,
                                  bool area_factor = true);
};

/// h(x) = gamma exp(-(x / (0.6 lambda_min))^4).
double scaling_kernel(double x, const KernelConfig& cfg);

/// L scales log-equispaced from 2/lambda_min down to 2/lambda_max.
std::vector<double> wavelet_scales(int levels, double lambda_min, double lambda_max);

/// Per-vertex signatures, p x m. Row layout is level-major: for L = 1..R the
/// L wavelet coefficients at t_1 > ... > t_L followed by the scaling
/// coefficient.
struct SignatureMatrix {
  Eigen::MatrixXd values;
  int resolution = 0;

  int length() const noexcept { return static_cast<int>(values.rows()); }
  int vertex_count() const noexcept { return static_cast<int>(values.cols()); }
};

/// Signature at vertex j. Sums run over every eigenpair in `es`.
Eigen::VectorXd vertex_signature(const EigenSystem& es, const KernelConfig& cfg, int vertex);

SignatureMatrix signature_matrix(const EigenSystem& es, const KernelConfig& cfg);

/// CSV with p rows and m columns, 12 significant digits.
void write_signature_csv(const SignatureMatrix& sig, const std::filesystem::path& path);

// Signature cache: magic "SGWSIG\0\0", u32 version, u64 mesh hash, u32 k,
// u32 R, u32 kernel-id length + bytes, u8 area factor, u32 p, u32 m,
// f64 values[p*m] column-major.

struct SignatureKey {
  std::uint64_t mesh_hash = 0;
  int k = 0;
  int resolution = 0;
  std::string kernel;
  bool area_factor = true;

  bool operator==(const SignatureKey&) const = default;
};

void save_signature(const std::filesystem::path& path, const SignatureKey& key,
                    const SignatureMatrix& sig);
/// nullopt when the file is absent or was written for a different key.
std::optional<SignatureMatrix> load_signature(const std::filesystem::path& path,
                                              const SignatureKey& key);

}  // namespace sgw

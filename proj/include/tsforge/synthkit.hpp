#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tsforge::synthkit {

enum class KernelFamily {
  kConstant,
  kWhiteNoise,
  kLinear,
  kSquaredExponential,
  kRationalQuadratic,
  kPeriodic,
};

// One base covariance kernel. The parameter set depends on the family:
//   constant, white-noise, linear : variance
//   squared-exponential           : variance, lengthscale
//   rational-quadratic            : variance, lengthscale, alpha
//   periodic                      : variance, lengthscale, period (grid steps)
struct BaseKernel {
  KernelFamily family = KernelFamily::kConstant;
  double variance = 1.0;
  double lengthscale = 1.0;
  double alpha = 1.0;
  int period = 0;
};

// Binary composition tree over base kernels.
struct KernelExpr {
  enum class Node { kLeaf, kSum, kProduct };

  Node node = Node::kLeaf;
  BaseKernel leaf;
  std::shared_ptr<const KernelExpr> left;
  std::shared_ptr<const KernelExpr> right;

  static KernelExpr make_leaf(BaseKernel k);
  static KernelExpr make_sum(KernelExpr a, KernelExpr b);
  static KernelExpr make_product(KernelExpr a, KernelExpr b);

  int leaf_count() const;
  // S-expression form, e.g. "(+ (rbf 0.25) (per 32 1))".
  std::string to_sexpr() const;
};

struct SynthConfig {
  int length = 256;
  int max_kernels = 5;
  double jitter = 1e-6;
  std::uint64_t seed = 0;
  int decimals = 2;
};

struct TimeSeries {
  std::vector<double> values;
  std::string kernel_expr;  // provenance, empty for non-synthetic series
  std::uint64_t seed = 0;
};

// Default kernel bank for a given series length. Periodic periods are
// clipped to [2, length/2] and deduplicated.
std::vector<BaseKernel> default_bank(int length);

// Draws j ~ U{1..max_kernels} leaves with replacement and folds them with
// uniformly random sum/product operators.
KernelExpr sample_kernel_expr(const std::vector<BaseKernel>& bank,
                              int max_kernels, std::uint64_t rng_seed);

// Evaluates a base kernel at two grid positions in [0, 1]. White noise is
// index-based: nonzero only when i == j.
double eval_kernel(const BaseKernel& k, double gx, double gy, int ix, int iy,
                   int length);

double eval_expr(const KernelExpr& expr, double gx, double gy, int ix, int iy,
                 int length);

// Dense GP covariance on the grid t = 0..length-1 rescaled to [0, 1],
// with `jitter` added to the diagonal.
Eigen::MatrixXd eval_covariance(const KernelExpr& expr, int length,
                                double jitter);

// Draws one realization from the GP prior: L*z with L the Cholesky factor
// and z seeded standard normals, standardized to mean 0 / std 1.
// Near-constant draws are rejected and retried with seed+1 (max 8 tries);
// factorization failures escalate the jitter x10 (max 4 times).
TimeSeries draw_series(const KernelExpr& expr, const SynthConfig& config,
                       std::uint64_t rng_seed);

// Raw (non-standardized) draw, used by distribution tests.
Eigen::VectorXd draw_raw(const Eigen::MatrixXd& cov, std::uint64_t rng_seed);

}  // namespace tsforge::synthkit

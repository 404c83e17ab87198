#include "tsforge/synthkit.hpp"

#include "tsforge/errors.hpp"
#include "tsforge/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace tsforge::synthkit {

namespace {

std::string format_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string leaf_sexpr(const BaseKernel& k) {
  switch (k.family) {
    case KernelFamily::kConstant:
      return "(const " + format_num(k.variance) + ")";
    case KernelFamily::kWhiteNoise:
      return "(noise " + format_num(k.variance) + ")";
    case KernelFamily::kLinear:
      return "(linear " + format_num(k.variance) + ")";
    case KernelFamily::kSquaredExponential:
      return "(rbf " + format_num(k.lengthscale) + ")";
    case KernelFamily::kRationalQuadratic:
      return "(rq " + format_num(k.alpha) + " " + format_num(k.lengthscale) +
             ")";
    case KernelFamily::kPeriodic:
      return "(per " + std::to_string(k.period) + ")";
  }
  return "(?)";
}

}  // namespace

KernelExpr KernelExpr::make_leaf(BaseKernel k) {
  KernelExpr e;
  e.node = Node::kLeaf;
  e.leaf = k;
  return e;
}

KernelExpr KernelExpr::make_sum(KernelExpr a, KernelExpr b) {
  KernelExpr e;
  e.node = Node::kSum;
  e.left = std::make_shared<KernelExpr>(std::move(a));
  e.right = std::make_shared<KernelExpr>(std::move(b));
  return e;
}

KernelExpr KernelExpr::make_product(KernelExpr a, KernelExpr b) {
  KernelExpr e;
  e.node = Node::kProduct;
  e.left = std::make_shared<KernelExpr>(std::move(a));
  e.right = std::make_shared<KernelExpr>(std::move(b));
  return e;
}

int KernelExpr::leaf_count() const {
  if (node == Node::kLeaf) return 1;
  return left->leaf_count() + right->leaf_count();
}

std::string KernelExpr::to_sexpr() const {
  switch (node) {
    case Node::kLeaf:
      return leaf_sexpr(leaf);
    case Node::kSum:
      return "(+ " + left->to_sexpr() + " " + right->to_sexpr() + ")";
    case Node::kProduct:
      return "(* " + left->to_sexpr() + " " + right->to_sexpr() + ")";
  }
  return "(?)";
}

std::vector<BaseKernel> default_bank(int length) {
  std::vector<BaseKernel> bank;
  for (double v : {0.1, 1.0}) {
    bank.push_back({KernelFamily::kConstant, v});
  }
  for (double v : {0.1, 0.5}) {
    bank.push_back({KernelFamily::kWhiteNoise, v});
  }
  bank.push_back({KernelFamily::kLinear, 1.0});
  for (double l : {0.05, 0.1, 0.25, 0.5}) {
    bank.push_back({KernelFamily::kSquaredExponential, 1.0, l});
  }
  for (double a : {0.5, 2.0}) {
    bank.push_back({KernelFamily::kRationalQuadratic, 1.0, 0.2, a});
  }
  std::vector<int> periods = {length / 4, length / 8, length / 16, 24, 7};
  std::vector<int> seen;
  for (int p : periods) {
    const int clipped = std::clamp(p, 2, std::max(2, length / 2));
    if (std::find(seen.begin(), seen.end(), clipped) != seen.end()) continue;
    seen.push_back(clipped);
    BaseKernel k{KernelFamily::kPeriodic, 1.0, 1.0};
    k.period = clipped;
    bank.push_back(k);
  }
  return bank;
}

KernelExpr sample_kernel_expr(const std::vector<BaseKernel>& bank,
                              int max_kernels, std::uint64_t rng_seed) {
  if (bank.empty()) throw ConfigError("sample_kernel_expr: empty kernel bank");
  if (max_kernels < 1) throw ConfigError("sample_kernel_expr: max_kernels < 1");
  Rng rng(rng_seed);
  const int j = 1 + static_cast<int>(rng.index(max_kernels));
  KernelExpr expr = KernelExpr::make_leaf(bank[rng.index(bank.size())]);
  for (int i = 1; i < j; ++i) {
    KernelExpr leaf = KernelExpr::make_leaf(bank[rng.index(bank.size())]);
    if (rng.index(2) == 0) {
      expr = KernelExpr::make_sum(std::move(expr), std::move(leaf));
    } else {
      expr = KernelExpr::make_product(std::move(expr), std::move(leaf));
    }
  }
  return expr;
}

double eval_kernel(const BaseKernel& k, double gx, double gy, int ix, int iy,
                   int length) {
  const double d = gx - gy;
  switch (k.family) {
    case KernelFamily::kConstant:
      return k.variance;
    case KernelFamily::kWhiteNoise:
      return ix == iy ? k.variance : 0.0;
    case KernelFamily::kLinear:
      return k.variance * gx * gy;
    case KernelFamily::kSquaredExponential:
      return k.variance *
             std::exp(-d * d / (2.0 * k.lengthscale * k.lengthscale));
    case KernelFamily::kRationalQuadratic:
      return k.variance *
             std::pow(1.0 + d * d / (2.0 * k.alpha * k.lengthscale *
                                     k.lengthscale),
                      -k.alpha);
    case KernelFamily::kPeriodic: {
      const double pg = static_cast<double>(k.period) /
                        static_cast<double>(std::max(1, length - 1));
      const double s = std::sin(M_PI * d / pg);
      return k.variance *
             std::exp(-2.0 * s * s / (k.lengthscale * k.lengthscale));
    }
  }
  return 0.0;
}

double eval_expr(const KernelExpr& expr, double gx, double gy, int ix, int iy,
                 int length) {
  switch (expr.node) {
    case KernelExpr::Node::kLeaf: {
      const double v = eval_kernel(expr.leaf, gx, gy, ix, iy, length);
      if (!std::isfinite(v)) {
        throw SynthesisError("non-finite kernel value at leaf " +
                             leaf_sexpr(expr.leaf));
      }
      return v;
    }
    case KernelExpr::Node::kSum:
      return eval_expr(*expr.left, gx, gy, ix, iy, length) +
             eval_expr(*expr.right, gx, gy, ix, iy, length);
    case KernelExpr::Node::kProduct:
      return eval_expr(*expr.left, gx, gy, ix, iy, length) *
             eval_expr(*expr.right, gx, gy, ix, iy, length);
  }
  return 0.0;
}

Eigen::MatrixXd eval_covariance(const KernelExpr& expr, int length,
                                double jitter) {
  if (length < 2) throw ConfigError("eval_covariance: length < 2");
  if (jitter <= 0.0) throw ConfigError("eval_covariance: jitter <= 0");
  const double denom = static_cast<double>(length - 1);
  Eigen::MatrixXd cov(length, length);
  for (int i = 0; i < length; ++i) {
    const double gi = i / denom;
    for (int j = 0; j <= i; ++j) {
      const double gj = j / denom;
      const double v = eval_expr(expr, gi, gj, i, j, length);
      cov(i, j) = v;
      cov(j, i) = v;
    }
    cov(i, i) += jitter;
  }
  return cov;
}

Eigen::VectorXd draw_raw(const Eigen::MatrixXd& cov, std::uint64_t rng_seed) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw SynthesisError("draw_raw: covariance factorization failed");
  }
  Rng rng(rng_seed);
  Eigen::VectorXd z(cov.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return llt.matrixL() * z;
}

TimeSeries draw_series(const KernelExpr& expr, const SynthConfig& config,
                       std::uint64_t rng_seed) {
  constexpr int kMaxJitterEscalations = 4;
  constexpr int kMaxRetries = 8;
  constexpr double kDegenerateStd = 1e-8;

  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = config.jitter;
  bool factored = false;
  for (int esc = 0; esc <= kMaxJitterEscalations; ++esc) {
    llt.compute(eval_covariance(expr, config.length, jitter));
    if (llt.info() == Eigen::Success) {
      factored = true;
      break;
    }
    jitter *= 10.0;
  }
  if (!factored) {
    throw SynthesisError("draw_series: factorization failed for " +
                         expr.to_sexpr() + " after jitter escalation");
  }

  const Eigen::MatrixXd lower = llt.matrixL();
  const int n = config.length;
  for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
    Rng rng(rng_seed + static_cast<std::uint64_t>(attempt));
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.normal();
    Eigen::VectorXd values = lower * z;

    const double mean = values.mean();
    const double sd = std::sqrt((values.array() - mean).square().mean());
    if (sd < kDegenerateStd) continue;  // near-constant draw, reject

    values = (values.array() - mean) / sd;
    TimeSeries ts;
    ts.values.assign(values.data(), values.data() + n);
    ts.kernel_expr = expr.to_sexpr();
    ts.seed = rng_seed;
    return ts;
  }
  throw SynthesisError("draw_series: retry budget exhausted for " +
                       expr.to_sexpr());
}

}  // namespace tsforge::synthkit

#include "curlod/quadrature.hpp"

#include "curlod/error.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace curlod {

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  CURLOD_REQUIRE(n >= 1, "need at least one point");
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = 0.5 * (1.0 - t);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

namespace {

QuadratureRule collapsed_rule(int dim, int degree) {
  const int n = (degree + dim + 1) / 2;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadratureRule r;
  r.dim = dim;
  r.degree = degree;
  if (dim == 2) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double u = x[i], v = x[j] * (1 - x[i]);
        r.lambda.push_back({1 - u - v, u, v, 0});
        r.weight.push_back(2.0 * w[i] * w[j] * (1 - x[i]));
      }
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double u = x[i], v = x[j] * (1 - x[i]), s = x[k] * (1 - x[i]) * (1 - x[j]);
          r.lambda.push_back({1 - u - v - s, u, v, s});
          r.weight.push_back(6.0 * w[i] * w[j] * w[k] * (1 - x[i]) * (1 - x[i]) * (1 - x[j]));
        }
  }
  return r;
}

QuadratureRule low_order_rule(int dim, int degree) {
  QuadratureRule r;
  r.dim = dim;
  r.degree = degree;
  if (dim == 2) {
    r.lambda = {{0.5, 0.5, 0, 0}, {0.5, 0, 0.5, 0}, {0, 0.5, 0.5, 0}};
    r.weight = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  } else {
    const double a = 0.5854101966249685, b = 0.1381966011250105;
    r.lambda = {{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}};
    r.weight = {0.25, 0.25, 0.25, 0.25};
  }
  return r;
}

}  // namespace

const QuadratureRule& simplex_rule(int dim, int degree) {
  CURLOD_REQUIRE(dim == 2 || dim == 3, "dimension must be 2 or 3");
  CURLOD_REQUIRE(degree >= 0 && degree <= 20, "unsupported degree " + std::to_string(degree));
  static std::mutex mutex;
  static std::map<std::pair<int, int>, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  auto [it, fresh] = cache.try_emplace({dim, degree});
  if (fresh) it->second = degree <= 2 ? low_order_rule(dim, degree) : collapsed_rule(dim, degree);
  return it->second;
}

}  // namespace curlod

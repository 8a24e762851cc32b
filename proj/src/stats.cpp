#include "liouville/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "liouville/errors.hpp"

namespace liouville {

double compensated_sum(const std::vector<double>& x) {
  double s = 0.0, c = 0.0;
  for (double v : x) {
    double t = s + v;
    if (std::abs(s) >= std::abs(v))
      c += (s - t) + v;
    else
      c += (v - t) + s;
    s = t;
  }
  return s + c;
}

MeanSE mean_stderr(const std::vector<double>& x) {
  MeanSE r;
  r.n = x.size();
  if (r.n == 0) return r;
  r.mean = compensated_sum(x) / r.n;
  if (r.n < 2) return r;
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = (x[i] - r.mean) * (x[i] - r.mean);
  r.stderr_ = std::sqrt(compensated_sum(d) / (r.n - 1) / r.n);
  return r;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-transformed series, fast for small lambda.
    const double pi2 = M_PI * M_PI;
    double s = 0.0;
    for (int k = 1; k < 20; ++k) {
      double t = std::exp(-(2 * k - 1) * (2 * k - 1) * pi2 / (8 * lambda * lambda));
      s += t;
      if (t < 1e-17) break;
    }
    return 1.0 - std::sqrt(2 * M_PI) / lambda * s;
  }
  double s = 0.0;
  for (int k = 1; k < 100; ++k) {
    double t = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 1.0 : -1.0) * t;
    if (t < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace {
// Stephens' finite-n correction.
double ks_p(double d, double ne) {
  double rn = std::sqrt(ne);
  return kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d);
}
}  // namespace

KSResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw BoundsError("KS test needs data");
  std::sort(x.begin(), x.end());
  const double n = x.size();
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return {d, ks_p(d, n), x.size()};
}

KSResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw BoundsError("KS test needs data");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = a.size(), nb = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return {d, ks_p(d, na * nb / (na + nb)), a.size() + b.size()};
}

LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& w) {
  if (x.size() != y.size() || x.size() != w.size() || x.size() < 2) throw BoundsError("fit needs >= 2 points");
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i], sx += w[i] * x[i], sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i], sxy += w[i] * x[i] * y[i];
  }
  double det = sw * sxx - sx * sx;
  if (!(det > 0)) throw PrecisionError("degenerate fit design");
  LinearFit f;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  f.se_slope = std::sqrt(sw / det);
  f.se_intercept = std::sqrt(sxx / det);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - f.intercept - f.slope * x[i];
    f.chi2 += w[i] * r * r;
  }
  return f;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> w(x.size(), 1.0);
  LinearFit f = weighted_linear_fit(x, y, w);
  if (x.size() > 2) {
    double s2 = f.chi2 / (x.size() - 2);
    f.se_slope *= std::sqrt(s2);
    f.se_intercept *= std::sqrt(s2);
  }
  return f;
}

}  // namespace liouville

#ifndef LIOUVILLE_STATS_HPP_
#define LIOUVILLE_STATS_HPP_

#include <cstddef>
#include <functional>
#include <vector>

namespace liouville {

// Neumaier-compensated sum in index order.
double compensated_sum(const std::vector<double>& x);

struct MeanSE {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};
MeanSE mean_stderr(const std::vector<double>& x);

// P(K > lambda) for the Kolmogorov limiting distribution.
double kolmogorov_sf(double lambda);

struct KSResult {
  double statistic = 0.0;
  double p_value = 0.0;
  std::size_t n = 0;
};
KSResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
KSResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct LinearFit {
  double intercept = 0.0, slope = 0.0;
  double se_intercept = 0.0, se_slope = 0.0;
  double chi2 = 0.0;
};
// Weighted least squares y = intercept + slope x with weights w (1/sigma^2).
// Standard errors come from the weights, not the residual scatter.
LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& w);
// Ordinary least squares with residual-based standard errors.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace liouville

#endif  // LIOUVILLE_STATS_HPP_

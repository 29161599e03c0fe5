#ifndef GPL_STATS_HPP
#define GPL_STATS_HPP

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace gpl::stats {

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

// sample mean and standard error (sample sd / sqrt n)
Estimate estimate(const std::vector<double>& values);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// Kolmogorov survival function Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2)
double kolmogorov_q(double lambda);

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

double correlation(const std::vector<double>& a, const std::vector<double>& b);

double gamma_cdf(double shape, double x);
double inverse_gamma_cdf(double shape, double y);

struct ScalingFit {
    double slope = 0.0;
    double slope_stderr = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// least squares on (log x, log y)
ScalingFit fit_power_law(const std::vector<std::pair<double, double>>& points);

}  // namespace gpl::stats

#endif

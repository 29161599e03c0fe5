#include "gpl/special_functions.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "gpl/errors.hpp"

namespace gpl::special_functions {

namespace {

// B_2, B_4, ..., B_20
constexpr std::array<double, 10> kBernoulli = {
    1.0 / 6.0,        -1.0 / 30.0,    1.0 / 42.0,      -1.0 / 30.0,      5.0 / 66.0,
    -691.0 / 2730.0,  7.0 / 6.0,      -3617.0 / 510.0, 43867.0 / 798.0,  -174611.0 / 330.0};

constexpr double kAsymptoticCutoff = 20.0;

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double polygamma_asymptotic(int k, double x) {
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    if (k == 0) {
        double sum = 0.0;
        double p = inv2;
        for (int j = 1; j <= 10; ++j) {
            sum += kBernoulli[j - 1] / (2.0 * j) * p;
            p *= inv2;
        }
        return std::log(x) - 0.5 * inv - sum;
    }
    // (-1)^{k+1} [ (k-1)!/x^k + k!/(2x^{k+1}) + sum_j B_2j (2j+k-1)!/((2j)! x^{2j+k}) ]
    const double xk = std::pow(x, k);
    double sum = factorial(k - 1) / xk + factorial(k) / (2.0 * xk * x);
    double p = inv2 / xk;
    for (int j = 1; j <= 10; ++j) {
        sum += kBernoulli[j - 1] * factorial(2 * j + k - 1) / factorial(2 * j) * p;
        p *= inv2;
    }
    return (k % 2 == 1) ? sum : -sum;
}

void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw DomainError(std::string(what) + ": argument must be positive and finite");
}

}  // namespace

void validate(const ModelParams& p) {
    if (!(p.mu > 0.0) || !std::isfinite(p.mu)) throw DomainError("mu must be positive");
    if (!(p.rho > 0.0 && p.rho < p.mu)) throw DomainError("parameters must satisfy 0 < rho < mu");
}

double log_gamma(double x) {
    require_positive(x, "log_gamma");
#if defined(__GLIBC__)
    int sign = 0;
    return ::lgamma_r(x, &sign);
#else
    return std::lgamma(x);
#endif
}

double polygamma(int k, double x) {
    if (k < 0 || k > 3) throw DomainError("polygamma: order must be in 0..3");
    require_positive(x, "polygamma");
    // psi_k(x) = psi_k(x+1) - (-1)^k k! / x^{k+1}
    double shift = 0.0;
    const double kf = factorial(k);
    while (x < kAsymptoticCutoff) {
        shift += kf / std::pow(x, k + 1);
        x += 1.0;
    }
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    return polygamma_asymptotic(k, x) - sign * shift;
}

Direction characteristic_direction(const ModelParams& p) {
    validate(p);
    const double a = trigamma(p.rho);
    const double b = trigamma(p.mu - p.rho);
    return {a / (a + b), b / (a + b)};
}

double shape_function(const ModelParams& p) {
    const Direction xi = characteristic_direction(p);
    return -xi.e1 * digamma(p.mu - p.rho) - xi.e2 * digamma(p.rho);
}

double shape_function_at(double mu, double m, double n) {
    if (!(mu > 0.0)) throw DomainError("shape_function_at: mu must be positive");
    if (m < 0.0 || n < 0.0) throw DomainError("shape_function_at: point outside the quadrant");
    if (m == 0.0 && n == 0.0) return 0.0;
    // along the axes the free energy is that of a single column of bulk weights
    if (n == 0.0) return -m * digamma(mu);
    if (m == 0.0) return -n * digamma(mu);
    // Lambda(m,n) = min over r of -m psi0(mu-r) - n psi0(r); derivative m psi1(mu-r) - n psi1(r)
    double lo = 0.0;
    double hi = mu;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        const double d = m * trigamma(mu - mid) - n * trigamma(mid);
        if (d < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    const double r = 0.5 * (lo + hi);
    return -m * digamma(mu - r) - n * digamma(r);
}

double two_thirds_power(double N) {
    const double c = std::cbrt(N);
    return c * c;
}

long long scaled_floor(double v) {
    const double tol = 1e-9 * std::max(1.0, std::fabs(v));
    return static_cast<long long>(std::floor(v + tol));
}

LatticePoint characteristic_point(const ModelParams& p, long long N) {
    if (N <= 0) throw DomainError("N must be positive");
    const Direction xi = characteristic_direction(p);
    return {static_cast<int>(scaled_floor(N * xi.e1)), static_cast<int>(scaled_floor(N * xi.e2))};
}

double shape_loss(const ModelParams& p, long long N, double s) {
    validate(p);
    if (N <= 0) throw DomainError("shape_loss: N must be positive");
    if (s < 0.0) throw DomainError("shape_loss: s must be nonnegative");
    const LatticePoint v = characteristic_point(p, N);
    const long long k = scaled_floor(s * two_thirds_power(static_cast<double>(N)));
    if (k > v.x) throw DomainError("shape_loss: shifted endpoint leaves the quadrant");
    const double m = static_cast<double>(v.x - k);
    const double n = static_cast<double>(v.y + k);
    const double kd = static_cast<double>(k);
    return shape_function_at(p.mu, m, n) - kd * digamma(p.mu - p.rho) + kd * digamma(p.rho) -
           shape_function_at(p.mu, v.x, v.y);
}

double log_gamma_mgf(double alpha, double lambda) {
    require_positive(alpha, "log_gamma_mgf");
    if (!(alpha + lambda > 0.0)) throw DomainError("log_gamma_mgf: requires alpha + lambda > 0");
    return std::exp(log_gamma(alpha + lambda) - log_gamma(alpha) - lambda * digamma(alpha));
}

double rn_second_moment(double rho, double b, long long N, double a) {
    require_positive(rho, "rn_second_moment");
    if (N <= 0) throw DomainError("rn_second_moment: N must be positive");
    require_positive(a, "rn_second_moment");
    const double lambda = rho + b / std::cbrt(static_cast<double>(N));
    if (!(lambda > 0.0) || !(2.0 * lambda - rho > 0.0))
        throw DomainError("rn_second_moment: gamma arguments must be positive");
    const double count =
        static_cast<double>(scaled_floor(a * two_thirds_power(static_cast<double>(N))));
    const double per = log_gamma(rho) + log_gamma(2.0 * lambda - rho) - 2.0 * log_gamma(lambda);
    return std::exp(count * per);
}

double variance_helper_L(double theta, double x) {
    require_positive(theta, "variance_helper_L");
    require_positive(x, "variance_helper_L");
    // y = x t^{1/theta} turns x^{-theta} y^{theta-1} dy into dt/theta; t = e^{-s} then removes
    // the logarithmic singularity at t = 0
    const double shift = digamma(theta) - std::log(x);
    auto f = [&](double s) {
        return (shift + s / theta) * std::exp(x * -std::expm1(-s / theta) - s);
    };
    double err = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-12, &err);
    return value / theta;
}

}  // namespace gpl::special_functions

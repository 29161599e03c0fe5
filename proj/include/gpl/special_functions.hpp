#ifndef GPL_SPECIAL_FUNCTIONS_HPP
#define GPL_SPECIAL_FUNCTIONS_HPP

#include "gpl/lattice.hpp"

namespace gpl::special_functions {

struct ModelParams {
    double mu = 2.0;
    double rho = 1.0;
};

// l1-normalized direction
struct Direction {
    double e1 = 0.5;
    double e2 = 0.5;
};

void validate(const ModelParams& p);

double log_gamma(double x);

// k-th derivative of digamma, k in 0..3
double polygamma(int k, double x);

inline double digamma(double x) { return polygamma(0, x); }
inline double trigamma(double x) { return polygamma(1, x); }

Direction characteristic_direction(const ModelParams& p);

// Lambda(xi[rho])
double shape_function(const ModelParams& p);

// Lambda at an arbitrary point of the closed quadrant, homogeneous of degree one
double shape_function_at(double mu, double m, double n);

// v_N = (floor(N xi1), floor(N xi2))
LatticePoint characteristic_point(const ModelParams& p, long long N);

// N^{2/3} without the pow() rounding that turns 1000^{2/3} into 99.999...
double two_thirds_power(double N);

// floor that forgives a few ulps below an integer
long long scaled_floor(double v);

double shape_loss(const ModelParams& p, long long N, double s);

double log_gamma_mgf(double alpha, double lambda);

double rn_second_moment(double rho, double b, long long N, double a);

double variance_helper_L(double theta, double x);

}  // namespace gpl::special_functions

#endif

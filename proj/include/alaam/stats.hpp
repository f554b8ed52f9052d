#pragma once

#include <cmath>
#include <span>

namespace alaam {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

double mean(std::span<const double> x);
double variance(std::span<const double> x);  // divisor n-1; 0 for n < 2
double sd(std::span<const double> x);

// Linear-interpolation quantile (R type 7); q in [0, 1].
double quantile(std::span<const double> x, double q);

// Spearman rank correlation with average ranks for ties; NaN for constant input.
double spearman(std::span<const double> x, std::span<const double> y);

// Monte-Carlo standard error of the mean of a correlated series from
// non-overlapping batch means.
double batch_means_se(std::span<const double> x, std::size_t batches = 20);

struct WelchTest {
    double t = 0;
    double df = 0;
    double p_value = 1;  // two-sided
};
WelchTest welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace alaam

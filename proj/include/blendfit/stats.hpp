#pragma once

#include <Eigen/Core>

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace blendfit::stats {

/// Returned for statistics whose denominator vanishes (e.g. F of a perfect fit).
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct TestResult {
  double statistic = 0.0;
  std::optional<double> p_value;
};

// R^2 = 1 - SS_res / SS_tot. Throws ZeroVariance when y_true is constant.
double r_squared(std::span<const double> y_true, std::span<const double> y_pred);
double mse(std::span<const double> y_true, std::span<const double> y_pred);

/// sum (e_t - e_{t-1})^2 / sum e_t^2. Throws ZeroResiduals for an all-zero series.
double durbin_watson(std::span<const double> residuals);

/// Lagrange-multiplier form: LM = n * R^2 of e^2 regressed on [1, X];
/// p from chi-square with cols(X) degrees of freedom.
TestResult breusch_pagan(std::span<const double> residuals, const Eigen::MatrixXd& x);

/// (SS_reg / p) / (SS_res / (n - p - 1)); kInfinity when SS_res is zero.
double f_statistic(std::span<const double> y_true, std::span<const double> y_pred,
                   std::size_t n_params);

double pearson(std::span<const double> x, std::span<const double> y);
/// Pearson on average ranks.
double spearman(std::span<const double> x, std::span<const double> y);
/// 1-based ranks, ties receive the average of their positions.
std::vector<double> average_ranks(std::span<const double> v);

/// Chatterjee's xi(x, y): how well y is a function of x. Not symmetric.
/// Ties in x are broken by original position; ties in y use the general
/// l_i correction. A constant y yields 0.
double xi_correlation(std::span<const double> x, std::span<const double> y);

/// Shapiro-Wilk W with Royston's polynomial approximation of the
/// coefficients and his normalizing transform for the p-value.
/// Valid for 3 <= n <= 5000.
TestResult shapiro_wilk(std::span<const double> sample);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double dof);

/// Lag-1 sample autocorrelation.
double autocorrelation_lag1(std::span<const double> v);

double mean(std::span<const double> v);
double variance(std::span<const double> v);  // n - 1 denominator

}  // namespace blendfit::stats

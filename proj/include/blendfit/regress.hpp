#pragma once

#include "blendfit/stats.hpp"
#include "blendfit/transforms.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace blendfit::regress {

enum class Family { Ols, Polynomial, PcaReg, Pls, Exponential, LogExponential };

std::string_view family_name(Family f) noexcept;
std::optional<Family> parse_family(std::string_view text) noexcept;

struct FamilySpec {
  Family family = Family::Ols;
  std::size_t degree = 2;      // polynomial
  std::size_t components = 1;  // pca_reg, pls

  friend bool operator==(const FamilySpec&, const FamilySpec&) = default;
};

/// Goodness-of-fit and residual diagnostics for one in-sample fit.
/// Diagnostics that are undefined for the data (e.g. Durbin-Watson of an
/// exact fit) are left empty.
struct FitReport {
  std::size_t n_samples = 0;
  double r2 = 0.0;
  double mse = 0.0;
  std::optional<double> durbin_watson;
  std::optional<stats::TestResult> breusch_pagan;
  double f_statistic = 0.0;
  std::optional<double> pearson_resid_truth;  // Pearson(response, truth)
  std::optional<double> xi;                   // xi(response, truth)
  std::optional<stats::TestResult> shapiro_wilk;
  std::size_t model_bytes = 0;
};

/// A fitted per-blendshape regressor. Linear families (ols, pca_reg, pls)
/// are stored as an equivalent weight vector over the input features.
struct RegressorModel {
  FamilySpec spec;
  std::size_t input_dim = 0;
  Eigen::VectorXd weights;  // over expanded features for polynomial
  double bias = 0.0;
  Eigen::VectorXd rates;    // exponential families, one per input feature
  double link_offset = 1.0; // log_exponential: fit log(y + link_offset)
  FitReport report;

  void validate() const;
};

struct FitOptions {
  /// Applied to residuals before the autocorrelation / heteroskedasticity /
  /// normality diagnostics are computed.
  transforms::ResidualTransform residual_transform;
  double rate_lower = -20.0;
  double rate_upper = 20.0;
  int rate_max_iterations = 200;
  double rate_tolerance = 1e-8;
  int pls_max_iterations = 500;
};

/// Rows of x are samples. Targets must lie in [0, 1] and vary.
/// Errors: SingularDesign (rank-deficient design or rows <= cols),
/// NonConvergence (iteration caps), ZeroVariance, InvalidArgument.
RegressorModel fit(const FamilySpec& spec, const Eigen::MatrixXd& x, std::span<const double> y,
                   const FitOptions& options = {});

/// Unclamped model response. Throws DimensionMismatch on a wrong-sized input.
double predict_raw(const RegressorModel& model, const Eigen::VectorXd& features);

/// Monomials of total degree 1..degree in lexicographic order:
/// (x0, x1, ..., x0^2, x0 x1, ..., x1^2, ...).
Eigen::VectorXd polynomial_expand(const Eigen::VectorXd& x, std::size_t degree);
std::size_t polynomial_term_count(std::size_t dim, std::size_t degree);

/// Least squares with intercept via centered normal equations.
struct LinearSolution {
  Eigen::VectorXd weights;
  double bias = 0.0;
};
LinearSolution solve_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

/// Golden-section search for the rate r minimizing the residual sum of
/// squares of y ~ a * exp(r x) + c over [lower, upper].
double fit_exponential_rate(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            const FitOptions& options = {});

}  // namespace blendfit::regress

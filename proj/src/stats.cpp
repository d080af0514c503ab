#include "blendfit/stats.hpp"

#include "blendfit/error.hpp"

#include <Eigen/QR>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace blendfit::stats {

namespace {

void require_same_nonempty(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "series lengths differ: " + std::to_string(a.size()) +
                                               " vs " + std::to_string(b.size()));
  }
  if (a.empty()) throw Error(ErrorCode::InsufficientSamples, "empty series");
}

// c[0] + c[1] x + c[2] x^2 + ...
double poly(std::span<const double> c, double x) {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
  return acc;
}

}  // namespace

double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::InsufficientSamples, "mean of empty series");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  if (v.size() < 2) throw Error(ErrorCode::InsufficientSamples, "variance needs 2 samples");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

double r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
  require_same_nonempty(y_true, y_pred);
  const double m = mean(y_true);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - m) * (y_true[i] - m);
  }
  if (ss_tot == 0.0) throw Error(ErrorCode::ZeroVariance, "R^2 undefined for constant truth");
  return 1.0 - ss_res / ss_tot;
}

double mse(std::span<const double> y_true, std::span<const double> y_pred) {
  require_same_nonempty(y_true, y_pred);
  double ss = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
  }
  return ss / static_cast<double>(y_true.size());
}

double durbin_watson(std::span<const double> residuals) {
  if (residuals.size() < 2) {
    throw Error(ErrorCode::InsufficientSamples, "Durbin-Watson needs 2 residuals");
  }
  double num = 0.0;
  double den = residuals[0] * residuals[0];
  for (std::size_t t = 1; t < residuals.size(); ++t) {
    const double d = residuals[t] - residuals[t - 1];
    num += d * d;
    den += residuals[t] * residuals[t];
  }
  if (den == 0.0) throw Error(ErrorCode::ZeroResiduals, "all residuals are zero");
  return std::clamp(num / den, 0.0, 4.0);
}

TestResult breusch_pagan(std::span<const double> residuals, const Eigen::MatrixXd& x) {
  const auto n = static_cast<Eigen::Index>(residuals.size());
  if (x.rows() != n) {
    throw Error(ErrorCode::LengthMismatch, "design rows must equal residual count");
  }
  if (n <= x.cols() + 1) {
    throw Error(ErrorCode::InsufficientSamples, "Breusch-Pagan needs n > cols(X) + 1");
  }
  Eigen::VectorXd e2(n);
  for (Eigen::Index i = 0; i < n; ++i) e2[i] = residuals[i] * residuals[i];
  const double dof = static_cast<double>(x.cols());

  const double m = e2.mean();
  const double ss_tot = (e2.array() - m).square().sum();
  if (ss_tot == 0.0) return {0.0, 1.0};

  Eigen::MatrixXd design(n, x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < design.cols()) {
    throw Error(ErrorCode::SingularDesign, "auxiliary regression design is rank deficient");
  }
  const Eigen::VectorXd fitted = design * qr.solve(e2);
  const double ss_res = (e2 - fitted).squaredNorm();
  const double r2 = std::max(0.0, 1.0 - ss_res / ss_tot);
  const double lm = static_cast<double>(n) * r2;
  return {lm, chi_square_sf(lm, dof)};
}

double f_statistic(std::span<const double> y_true, std::span<const double> y_pred,
                   std::size_t n_params) {
  require_same_nonempty(y_true, y_pred);
  const std::size_t n = y_true.size();
  if (n_params == 0 || n <= n_params + 1) {
    throw Error(ErrorCode::InsufficientSamples, "F statistic needs n > n_params + 1 and n_params > 0");
  }
  const double m = mean(y_true);
  double ss_reg = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_reg += (y_pred[i] - m) * (y_pred[i] - m);
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
  }
  if (ss_res == 0.0) return kInfinity;
  const double df_reg = static_cast<double>(n_params);
  const double df_res = static_cast<double>(n - n_params - 1);
  return (ss_reg / df_reg) / (ss_res / df_res);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  require_same_nonempty(x, y);
  if (x.size() < 2) throw Error(ErrorCode::InsufficientSamples, "correlation needs 2 samples");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::ZeroVariance, "correlation undefined for a constant series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean of (i+1..j)
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_same_nonempty(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double xi_correlation(std::span<const double> x, std::span<const double> y) {
  require_same_nonempty(x, y);
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorCode::InsufficientSamples, "xi needs 2 samples");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });

  std::vector<double> sorted_y(y.begin(), y.end());
  std::sort(sorted_y.begin(), sorted_y.end());

  // r: #{j : y_j <= y_(i)}, l: #{j : y_j >= y_(i)}, in x order
  std::vector<double> r(n);
  double l_sum = 0.0;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double yi = y[order[i]];
    r[i] = static_cast<double>(std::upper_bound(sorted_y.begin(), sorted_y.end(), yi) -
                               sorted_y.begin());
    const double l = dn - static_cast<double>(std::lower_bound(sorted_y.begin(), sorted_y.end(), yi) -
                                              sorted_y.begin());
    l_sum += l * (dn - l);
  }
  if (l_sum == 0.0) return 0.0;
  double diff_sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) diff_sum += std::abs(r[i + 1] - r[i]);
  return 1.0 - dn * diff_sum / (2.0 * l_sum);
}

TestResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000) {
    throw Error(ErrorCode::SampleSizeOutOfRange,
                "Shapiro-Wilk requires 3 <= n <= 5000, got " + std::to_string(n));
  }
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (range < 1e-19) throw Error(ErrorCode::ZeroVariance, "Shapiro-Wilk of a constant sample");

  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};

  const boost::math::normal_distribution<double> std_normal;
  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);

  // a[0..half) are the positive coefficients for the upper order statistics.
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = boost::math::quantile(std_normal, (static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, rsn) - m[0] / ssumm2;
    std::size_t first_plain = 1;
    double fac = 0.0;
    if (n > 5) {
      const double a2 = -m[1] / ssumm2 + poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
      first_plain = 2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first_plain; i < half; ++i) a[i] = -m[i] / fac;
  }

  // W as the squared correlation between scaled data and the signed coefficients.
  std::vector<double> coef(n, 0.0);
  for (std::size_t i = 0; i < half; ++i) {
    coef[i] = -a[i];
    coef[n - 1 - i] = a[i];
  }
  const double sa = std::accumulate(coef.begin(), coef.end(), 0.0) / an;
  double sx = 0.0;
  for (double v : x) sx += v / range;
  sx /= an;
  double ssa = 0.0;
  double ssx = 0.0;
  double sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double asa = coef[i] - sa;
    const double xsx = x[i] / range - sx;
    ssa += asa * asa;
    ssx += xsx * xsx;
    sax += asa * xsx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  const double w = 1.0 - w1;

  if (n == 3) {
    constexpr double six_over_pi = 1.90985931710274;
    constexpr double pi_over_three = 1.04719755119660;
    const double p = six_over_pi * (std::asin(std::sqrt(w)) - pi_over_three);
    return {w, std::clamp(p, 0.0, 1.0)};
  }
  double y = std::log(w1);
  const double log_n = std::log(an);
  double mu = 0.0;
  double sigma = 0.0;
  if (n <= 11) {
    const double gamma = poly(g, an);
    if (y >= gamma) return {w, 1e-99};
    y = -std::log(gamma - y);
    mu = poly(c3, an);
    sigma = std::exp(poly(c4, an));
  } else {
    mu = poly(c5, log_n);
    sigma = std::exp(poly(c6, log_n));
  }
  const double p = boost::math::cdf(boost::math::complement(std_normal, (y - mu) / sigma));
  return {w, p};
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

double autocorrelation_lag1(std::span<const double> v) {
  if (v.size() < 3) throw Error(ErrorCode::InsufficientSamples, "autocorrelation needs 3 samples");
  const double m = mean(v);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) {
    den += (v[t] - m) * (v[t] - m);
    if (t > 0) num += (v[t] - m) * (v[t - 1] - m);
  }
  if (den == 0.0) throw Error(ErrorCode::ZeroVariance, "autocorrelation of a constant series");
  return num / den;
}

}  // namespace blendfit::stats

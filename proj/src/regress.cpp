#include "blendfit/regress.hpp"

#include "blendfit/error.hpp"
#include "blendfit/model_io.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace blendfit::regress {

namespace {

constexpr double kRankThreshold = 1e-10;

void for_each_monomial(std::size_t dim, std::size_t degree,
                       const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> idx;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t left) {
    if (left == 0) {
      visit(idx);
      return;
    }
    for (std::size_t i = start; i < dim; ++i) {
      idx.push_back(i);
      rec(i, left - 1);
      idx.pop_back();
    }
  };
  for (std::size_t d = 1; d <= degree; ++d) rec(0, d);
}

Eigen::MatrixXd expand_rows(const Eigen::MatrixXd& x, std::size_t degree) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(polynomial_term_count(
                                    static_cast<std::size_t>(x.cols()), degree)));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out.row(r) = polynomial_expand(x.row(r).transpose(), degree).transpose();
  }
  return out;
}

Eigen::MatrixXd exp_features(const Eigen::MatrixXd& x, const Eigen::VectorXd& rates) {
  Eigen::MatrixXd e(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) e.col(c) = (rates[c] * x.col(c).array()).exp().matrix();
  return e;
}

double exp_sum(const RegressorModel& m, const Eigen::VectorXd& f) {
  return m.weights.dot((m.rates.array() * f.array()).exp().matrix()) + m.bias;
}

LinearSolution fit_pls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::size_t components,
                       const FitOptions& options) {
  const auto p = x.cols();
  if (components > static_cast<std::size_t>(p)) {
    throw Error(ErrorCode::InvalidArgument, "PLS components exceed feature count");
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  Eigen::MatrixXd xr = x.rowwise() - x_mean;
  Eigen::VectorXd yr = y.array() - y_mean;

  const auto a_count = static_cast<Eigen::Index>(components);
  Eigen::MatrixXd w_mat(p, a_count);
  Eigen::MatrixXd p_mat(p, a_count);
  Eigen::VectorXd q_vec(a_count);

  for (Eigen::Index a = 0; a < a_count; ++a) {
    Eigen::VectorXd u = yr;
    Eigen::VectorXd t_prev = Eigen::VectorXd::Zero(x.rows());
    Eigen::VectorXd w;
    Eigen::VectorXd t;
    double q = 0.0;
    bool converged = false;
    for (int it = 0; it < options.pls_max_iterations; ++it) {
      w = xr.transpose() * u;
      const double w_norm = w.norm();
      if (!(w_norm > 0.0) || !std::isfinite(w_norm)) {
        throw Error(ErrorCode::SingularDesign,
                    "PLS component " + std::to_string(a + 1) + " has no remaining covariance");
      }
      w /= w_norm;
      t = xr * w;
      const double tt = t.squaredNorm();
      if (!(tt > 0.0)) throw Error(ErrorCode::SingularDesign, "PLS scores vanished");
      q = yr.dot(t) / tt;
      if (q == 0.0) throw Error(ErrorCode::SingularDesign, "PLS component carries no response");
      u = yr / q;
      if ((t - t_prev).norm() <= 1e-12 * t.norm()) {
        converged = true;
        break;
      }
      t_prev = t;
    }
    if (!converged) throw Error(ErrorCode::NonConvergence, "NIPALS iteration cap reached");
    const Eigen::VectorXd loading = xr.transpose() * t / t.squaredNorm();
    xr -= t * loading.transpose();
    yr -= q * t;
    w_mat.col(a) = w;
    p_mat.col(a) = loading;
    q_vec[a] = q;
  }
  const Eigen::MatrixXd pw = p_mat.transpose() * w_mat;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(pw);
  if (!lu.isInvertible()) throw Error(ErrorCode::SingularDesign, "PLS loadings are singular");
  LinearSolution out;
  out.weights = w_mat * lu.solve(q_vec);
  out.bias = y_mean - x_mean.dot(out.weights);
  return out;
}

void check_targets(const Eigen::MatrixXd& x, std::span<const double> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "feature rows must equal target count");
  }
  if (x.cols() == 0) throw Error(ErrorCode::DimensionMismatch, "no features");
  if (!x.allFinite()) throw Error(ErrorCode::NonFiniteValue, "non-finite feature value");
  for (double v : y) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "targets must lie in [0, 1]");
    }
  }
}

FitReport build_report(const RegressorModel& model, const Eigen::MatrixXd& x,
                       std::span<const double> y, const FitOptions& options) {
  const std::size_t n = y.size();
  std::vector<double> pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    pred[i] = predict_raw(model, x.row(static_cast<Eigen::Index>(i)).transpose());
  }
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - pred[i];

  FitReport rep;
  rep.n_samples = n;
  rep.r2 = stats::r_squared(y, pred);
  rep.mse = stats::mse(y, pred);
  std::size_t n_params = static_cast<std::size_t>(model.weights.size());
  if (model.rates.size() > 0) n_params += static_cast<std::size_t>(model.rates.size());
  rep.f_statistic = n > n_params + 1 ? stats::f_statistic(y, pred, n_params) : 0.0;
  try {
    rep.pearson_resid_truth = stats::pearson(pred, y);
  } catch (const Error&) {
  }
  rep.xi = stats::xi_correlation(pred, y);

  const auto diag = transforms::apply_residual_transform(options.residual_transform, resid);
  try {
    rep.durbin_watson = stats::durbin_watson(diag);
  } catch (const Error&) {
  }
  try {
    rep.breusch_pagan = stats::breusch_pagan(diag, x);
  } catch (const Error&) {
  }
  if (diag.size() >= 3 && diag.size() <= 5000) {
    try {
      rep.shapiro_wilk = stats::shapiro_wilk(diag);
    } catch (const Error&) {
    }
  }
  return rep;
}

}  // namespace

std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::Ols: return "ols";
    case Family::Polynomial: return "polynomial";
    case Family::PcaReg: return "pca_reg";
    case Family::Pls: return "pls";
    case Family::Exponential: return "exponential";
    case Family::LogExponential: return "log_exponential";
  }
  return "ols";
}

std::optional<Family> parse_family(std::string_view text) noexcept {
  for (auto f : {Family::Ols, Family::Polynomial, Family::PcaReg, Family::Pls, Family::Exponential,
                 Family::LogExponential}) {
    if (family_name(f) == text) return f;
  }
  return std::nullopt;
}

void RegressorModel::validate() const {
  if (input_dim == 0) throw Error(ErrorCode::InvalidArgument, "regressor input dimension is 0");
  if (!weights.allFinite() || !std::isfinite(bias)) {
    throw Error(ErrorCode::InvalidArgument, "regressor weights must be finite");
  }
  std::size_t expected = input_dim;
  switch (spec.family) {
    case Family::Polynomial:
      if (spec.degree < 1) throw Error(ErrorCode::InvalidArgument, "polynomial degree must be >= 1");
      expected = polynomial_term_count(input_dim, spec.degree);
      break;
    case Family::PcaReg:
    case Family::Pls:
      if (spec.components < 1) throw Error(ErrorCode::InvalidArgument, "components must be >= 1");
      break;
    case Family::Exponential:
    case Family::LogExponential:
      if (static_cast<std::size_t>(rates.size()) != input_dim || !rates.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "exponential rates must match input dimension");
      }
      if (spec.family == Family::LogExponential && !(link_offset > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "log link offset must be positive");
      }
      break;
    case Family::Ols:
      break;
  }
  if (static_cast<std::size_t>(weights.size()) != expected) {
    throw Error(ErrorCode::InvalidArgument, "regressor weight count " +
                                                std::to_string(weights.size()) + " != expected " +
                                                std::to_string(expected));
  }
}

std::size_t polynomial_term_count(std::size_t dim, std::size_t degree) {
  // sum over d of C(dim + d - 1, d)
  std::size_t total = 0;
  std::size_t term = 1;
  for (std::size_t d = 1; d <= degree; ++d) {
    term = term * (dim + d - 1) / d;
    total += term;
  }
  return total;
}

Eigen::VectorXd polynomial_expand(const Eigen::VectorXd& x, std::size_t degree) {
  const auto dim = static_cast<std::size_t>(x.size());
  Eigen::VectorXd out(static_cast<Eigen::Index>(polynomial_term_count(dim, degree)));
  Eigen::Index k = 0;
  for_each_monomial(dim, degree, [&](const std::vector<std::size_t>& idx) {
    double v = 1.0;
    for (auto i : idx) v *= x[static_cast<Eigen::Index>(i)];
    out[k++] = v;
  });
  return out;
}

LinearSolution solve_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() <= x.cols()) {
    throw Error(ErrorCode::SingularDesign, "least squares needs more rows than columns (" +
                                               std::to_string(x.rows()) + " <= " +
                                               std::to_string(x.cols()) + ")");
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd norms = xc.colwise().norm().transpose();
  if ((norms.array() == 0.0).any()) {
    throw Error(ErrorCode::SingularDesign, "a feature column is constant");
  }
  // unit-norm columns keep the normal matrix well scaled for the rank test
  const Eigen::MatrixXd z = xc * norms.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd normal = z.transpose() * z;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < normal.cols()) {
    throw Error(ErrorCode::SingularDesign, "normal equations are rank deficient (rank " +
                                               std::to_string(qr.rank()) + " of " +
                                               std::to_string(normal.cols()) + ")");
  }
  const Eigen::VectorXd beta = qr.solve(z.transpose() * (y.array() - y_mean).matrix());
  LinearSolution out;
  out.weights = beta.cwiseQuotient(norms);
  out.bias = y_mean - x_mean.dot(out.weights);
  return out;
}

double fit_exponential_rate(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            const FitOptions& options) {
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double syy = yc.squaredNorm();
  auto sse = [&](double r) {
    const Eigen::ArrayXd z = (r * x.array()).exp();
    if (!z.allFinite()) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd zc = (z - z.mean()).matrix();
    const double szz = zc.squaredNorm();
    if (!(szz > 0.0)) return syy;
    const double szy = zc.dot(yc);
    return syy - szy * szy / szz;
  };

  constexpr double inv_phi = 0.6180339887498949;
  double lo = options.rate_lower;
  double hi = options.rate_upper;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = sse(c);
  double fd = sse(d);
  int it = 0;
  for (; it < options.rate_max_iterations && (hi - lo) > options.rate_tolerance; ++it) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = sse(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = sse(d);
    }
  }
  if ((hi - lo) > options.rate_tolerance) {
    throw Error(ErrorCode::NonConvergence, "exponential rate search hit the iteration cap");
  }
  double r = 0.5 * (lo + hi);
  // r = 0 collapses the feature into the intercept; nudge off it
  if (std::abs(r) < 1e-6) r = r < 0.0 ? -1e-6 : 1e-6;
  return r;
}

RegressorModel fit(const FamilySpec& spec, const Eigen::MatrixXd& x, std::span<const double> y,
                   const FitOptions& options) {
  check_targets(x, y);
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  if ((yv.array() == yv[0]).all()) throw Error(ErrorCode::ZeroVariance, "targets are constant");

  RegressorModel model;
  model.spec = spec;
  model.input_dim = static_cast<std::size_t>(x.cols());

  switch (spec.family) {
    case Family::Ols: {
      auto sol = solve_least_squares(x, yv);
      model.weights = std::move(sol.weights);
      model.bias = sol.bias;
      break;
    }
    case Family::Polynomial: {
      if (spec.degree < 1) throw Error(ErrorCode::InvalidArgument, "polynomial degree must be >= 1");
      auto sol = solve_least_squares(expand_rows(x, spec.degree), yv);
      model.weights = std::move(sol.weights);
      model.bias = sol.bias;
      break;
    }
    case Family::PcaReg: {
      if (spec.components < 1) throw Error(ErrorCode::InvalidArgument, "components must be >= 1");
      const auto pcd = transforms::fit_pcd(x, spec.components);
      const Eigen::MatrixXd scores =
          (x.rowwise() - pcd.center.transpose()) * pcd.components.transpose();
      const auto sol = solve_least_squares(scores, yv);
      model.weights = pcd.components.transpose() * sol.weights;
      model.bias = sol.bias - sol.weights.dot(pcd.components * pcd.center);
      break;
    }
    case Family::Pls: {
      if (spec.components < 1) throw Error(ErrorCode::InvalidArgument, "components must be >= 1");
      if (x.rows() <= x.cols()) throw Error(ErrorCode::SingularDesign, "PLS needs rows > cols");
      auto sol = fit_pls(x, yv, spec.components, options);
      model.weights = std::move(sol.weights);
      model.bias = sol.bias;
      break;
    }
    case Family::Exponential:
    case Family::LogExponential: {
      Eigen::VectorXd target = yv;
      if (spec.family == Family::LogExponential) {
        target = (yv.array() + model.link_offset).log().matrix();
      }
      model.rates.resize(x.cols());
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        model.rates[c] = fit_exponential_rate(x.col(c), target, options);
      }
      auto sol = solve_least_squares(exp_features(x, model.rates), target);
      model.weights = std::move(sol.weights);
      model.bias = sol.bias;
      break;
    }
  }
  model.validate();
  model.report = build_report(model, x, y, options);
  model.report.model_bytes = model_io::serialized_size(model);
  return model;
}

double predict_raw(const RegressorModel& model, const Eigen::VectorXd& features) {
  if (static_cast<std::size_t>(features.size()) != model.input_dim) {
    throw Error(ErrorCode::DimensionMismatch, "regressor expects " +
                                                  std::to_string(model.input_dim) +
                                                  " features, got " + std::to_string(features.size()));
  }
  switch (model.spec.family) {
    case Family::Ols:
    case Family::PcaReg:
    case Family::Pls:
      return model.weights.dot(features) + model.bias;
    case Family::Polynomial:
      return model.weights.dot(polynomial_expand(features, model.spec.degree)) + model.bias;
    case Family::Exponential:
      return exp_sum(model, features);
    case Family::LogExponential:
      return std::exp(exp_sum(model, features)) - model.link_offset;
  }
  return 0.0;
}

}  // namespace blendfit::regress

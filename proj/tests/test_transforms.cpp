#include "blendfit/transforms.hpp"

#include "oracles/reference_values.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace blendfit;
using namespace blendfit::transforms;
using testing::error_code;

namespace {

Eigen::MatrixXd ols_design() {
  Eigen::MatrixXd x(40, 3);
  for (Eigen::Index r = 0; r < 40; ++r)
    for (Eigen::Index c = 0; c < 3; ++c) x(r, c) = oracle::kOlsX[r * 3 + c];
  return x;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("PCD on points along y = x") {
  Eigen::MatrixXd s(5, 2);
  for (int i = 0; i < 5; ++i) s.row(i) << i, i;
  const auto p = fit_pcd(s, 1);
  REQUIRE(p.components.rows() == 1);
  const double h = 1.0 / std::sqrt(2.0);
  CHECK(p.components(0, 0) == doctest::Approx(h).epsilon(1e-12));
  CHECK(p.components(0, 1) == doctest::Approx(h).epsilon(1e-12));
  CHECK(p.eigenvalues[0] == doctest::Approx(5.0).epsilon(1e-12));  // var(x) + var(y) with n-1 = 4

  // projection of (4, 4) is its distance from the center (2, 2)
  const auto out = apply_step(p, vec({4.0, 4.0}));
  CHECK(out[0] == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("PCD tie between equal eigenvalues goes to the lower axis") {
  Eigen::MatrixXd s(4, 2);
  s << 1, 0, -1, 0, 0, 1, 0, -1;
  const auto p = fit_pcd(s, 2);
  CHECK(std::abs(p.components(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(p.components(1, 1)) == doctest::Approx(1.0));
  CHECK(p.components(0, 0) > 0);
}

TEST_CASE("PCD errors") {
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(6, 3, 0.25);
  CHECK(error_code([&] { (void)fit_pcd(flat, 1); }) == ErrorCode::DegenerateCovariance);
  Eigen::MatrixXd one(1, 3);
  one << 1, 2, 3;
  CHECK(error_code([&] { (void)fit_pcd(one, 1); }) == ErrorCode::InsufficientSamples);
  CHECK(error_code([&] { (void)fit_pcd(ols_design(), 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("PCD matches the numpy eigendecomposition") {
  const auto p = fit_pcd(ols_design(), 1);
  CHECK(p.eigenvalues[0] == doctest::Approx(oracle::kPcaLeadEigenvalue).epsilon(1e-10));
  for (int i = 0; i < 3; ++i) {
    CHECK(p.components(0, i) == doctest::Approx(oracle::kPcaLeadComponent[i]).epsilon(1e-9));
  }
}

TEST_CASE("PCD components are orthonormal and ordered") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  Eigen::MatrixXd s(200, 6);
  for (Eigen::Index r = 0; r < s.rows(); ++r)
    for (Eigen::Index c = 0; c < s.cols(); ++c) s(r, c) = g(rng) * static_cast<double>(c + 1);
  const auto p = fit_pcd(s, 4);
  const Eigen::MatrixXd gram = p.components * p.components.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index i = 1; i < 4; ++i) CHECK(p.eigenvalues[i - 1] >= p.eigenvalues[i]);

  // projected variance equals the eigenvalue
  Eigen::VectorXd proj(s.rows());
  for (Eigen::Index r = 0; r < s.rows(); ++r) proj[r] = apply_step(p, s.row(r).transpose())[0];
  const double var = (proj.array() - proj.mean()).square().sum() / static_cast<double>(s.rows() - 1);
  CHECK(var == doctest::Approx(p.eigenvalues[0]).epsilon(1e-9));
  CHECK(std::abs(proj.mean()) < 1e-10);

  // refitting yields identical numbers
  const auto again = fit_pcd(s, 4);
  CHECK(again.components == p.components);
  CHECK(again.eigenvalues == p.eigenvalues);
}

TEST_CASE("displacement from neutral") {
  const std::vector<Vec3> neutral{{0, 0, 0}, {1, 1, 1}};
  const std::vector<Vec3> pts{{0.1, 0, 0}, {1, 0.5, 1}};
  const auto d = step_displacement(pts, neutral);
  CHECK(d.size() == 6);
  CHECK(d[0] == doctest::Approx(0.1));
  CHECK(d[4] == doctest::Approx(-0.5));
  CHECK(d[5] == 0.0);
  CHECK(step_displacement(neutral, neutral).isZero());
  CHECK(error_code([&] { (void)step_displacement(pts, std::span(neutral).first(1)); }) ==
        ErrorCode::LengthMismatch);

  Displacement step{vec({0, 0, 0, 1, 1, 1})};
  CHECK(apply_step(step, vec({0.1, 0, 0, 1, 0.5, 1})) == d);
}

TEST_CASE("aspect ratio against the neutral distance") {
  const std::vector<Vec3> neutral{{0, 0, 0}, {0, 1, 0}, {2, 0, 0}};
  const auto ar = make_aspect_ratio(neutral, {{0, 1}, {0, 2}});
  CHECK(ar.neutral_distances == std::vector<double>{1.0, 2.0});
  const std::vector<Vec3> open{{0, 0, 0}, {0, 1.5, 0}, {2, 0, 0}};
  const auto r = step_aspect_ratio(open, ar);
  CHECK(r[0] == doctest::Approx(1.5));
  CHECK(r[1] == doctest::Approx(1.0));
  CHECK(step_aspect_ratio(neutral, ar).isApproxToConstant(1.0));

  const std::vector<Vec3> pinched{{0, 0, 0}, {0, 0, 0}, {2, 0, 0}};
  CHECK(error_code([&] { (void)make_aspect_ratio(pinched, {{0, 1}}); }) == ErrorCode::DegenerateAnchorPair);
  CHECK(error_code([&] { (void)make_aspect_ratio(neutral, {{0, 3}}); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("chain examples") {
  Standardize st{vec({1.0}), vec({2.0})};
  TransformChain chain({st}, 1);
  CHECK(apply_chain(chain, vec({3.0}))[0] == doctest::Approx(1.0));

  TransformChain log_chain({Log1p{1}}, 1);
  CHECK(apply_chain(log_chain, vec({0.0}))[0] == 0.0);
  CHECK(apply_chain(log_chain, vec({std::exp(1.0) - 1.0}))[0] == doctest::Approx(1.0));
  CHECK(error_code([&] { (void)apply_chain(log_chain, vec({-1.0})); }) == ErrorCode::DomainViolation);

  TransformChain exp_chain({ExpScale{2, 0.5}}, 2);
  const auto e = apply_chain(exp_chain, vec({0.0, 2.0}));
  CHECK(e[0] == 1.0);
  CHECK(e[1] == doctest::Approx(std::exp(1.0)));

  TransformChain empty({}, 3);
  CHECK(apply_chain(empty, vec({1, 2, 3})) == vec({1, 2, 3}));
  CHECK(error_code([&] { (void)apply_chain(empty, vec({1, 2})); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("chain dimensions must line up") {
  Standardize two{vec({0, 0}), vec({1, 1})};
  CHECK(error_code([&] { TransformChain({Log1p{3}, two}, 3); }) == ErrorCode::DimensionMismatch);
  CHECK(error_code([&] { TransformChain({}, 0); }) == ErrorCode::InvalidArgument);

  Eigen::MatrixXd s(5, 2);
  for (int i = 0; i < 5; ++i) s.row(i) << i, 2 * i + 1;
  const auto p = fit_pcd(s, 1);
  TransformChain ok({p, Standardize{vec({0}), vec({1})}}, 2);
  CHECK(ok.output_dim() == 1);
  CHECK(input_dim(p) == 2);
  CHECK(output_dim(p) == 1);
  CHECK(kind_name(p) == "pcd_project");
}

TEST_CASE("step validation rejects broken invariants") {
  CHECK_THROWS_AS(validate(Standardize{vec({0}), vec({0})}), Error);
  CHECK_THROWS_AS(validate(ExpScale{1, std::nan("")}), Error);
  CHECK_THROWS_AS(validate(Log1p{0}), Error);
  PcdProject p;
  p.center = vec({0, 0});
  p.components = Eigen::MatrixXd::Ones(1, 2);
  p.eigenvalues = vec({1});
  CHECK_THROWS_AS(validate(p), Error);
}

TEST_CASE("standardize fit") {
  Eigen::MatrixXd s(4, 2);
  s << 1, 5, 2, 5, 3, 5, 4, 5;
  const auto st = fit_standardize(s);
  CHECK(st.mean[0] == doctest::Approx(2.5));
  CHECK(st.scale[0] == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(st.scale[1] == 1.0);
}

TEST_CASE("residual transforms match scipy Box-Cox") {
  const std::vector<double> in(std::begin(oracle::kBoxCoxInput), std::end(oracle::kBoxCoxInput));
  const auto check = [&](double lambda, const double* expect) {
    const auto out = apply_residual_transform({ResidualTransform::Kind::BoxCox, lambda, 0.0}, in);
    for (std::size_t i = 0; i < in.size(); ++i) CHECK(out[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  };
  check(0.0, oracle::kBoxCox0);
  check(0.5, oracle::kBoxCoxHalf);
  check(2.0, oracle::kBoxCox2);

  // lambda -> 0 approaches the log
  const auto tiny = apply_residual_transform({ResidualTransform::Kind::BoxCox, 1e-8, 0.0}, in);
  for (std::size_t i = 0; i < in.size(); ++i) CHECK(std::abs(tiny[i] - std::log(in[i])) < 1e-7);

  const auto logged = apply_residual_transform({ResidualTransform::Kind::Log, 1.0, 1.0}, in);
  CHECK(logged[1] == doctest::Approx(std::log(2.0)));

  const auto same = apply_residual_transform({}, std::vector<double>{-1.0, 2.0});
  CHECK(same == std::vector<double>{-1.0, 2.0});

  CHECK(error_code([&] {
          (void)apply_residual_transform({ResidualTransform::Kind::Log, 1.0, 0.0}, std::vector<double>{-0.5});
        }) == ErrorCode::DomainViolation);
}

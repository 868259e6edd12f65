#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "evossl/linear_model.hpp"
#include "test_oracles.hpp"

using namespace evossl;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, oracle::Splitmix& rng) {
  Eigen::MatrixXd X(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) X(i, j) = rng.uniform() * 4.0 - 2.0;
  return X;
}

}  // namespace

TEST_CASE("separable one-dimensional problem orders posteriors") {
  Eigen::MatrixXd X(2, 1);
  X << -1.0, 1.0;
  const std::vector<int> y{0, 1};
  const LinearClassifier m = fit_logistic(X, y, 2, ThetaClf{}, 0);
  Eigen::MatrixXd q(1, 1);
  q << 1.0;
  const Eigen::MatrixXd P = m.predict_proba(q);
  CHECK(P(0, 1) > 0.5);
}

TEST_CASE("empty training set is rejected") {
  Eigen::MatrixXd X(0, 2);
  CHECK_THROWS(fit_logistic(X, {}, 2, ThetaClf{}, 0));
}

TEST_CASE("single-sample classes are allowed") {
  Eigen::MatrixXd X(3, 2);
  X << 0, 0, 1, 1, -1, 2;
  const std::vector<int> y{0, 1, 2};
  const LinearClassifier m = fit_logistic(X, y, 3, ThetaClf{}, 0);
  CHECK(m.predict(X).size() == 3);
}

TEST_CASE("analytic gradient matches central finite differences") {
  oracle::Splitmix rng(21);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5, d = 3, C = 3;
    const Eigen::MatrixXd X = random_matrix(n, d, rng);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) y[i] = rng.below(C);
    Eigen::MatrixXd W = random_matrix(C, d, rng) * 0.5;
    Eigen::VectorXd b = random_matrix(C, 1, rng).col(0) * 0.5;
    const double l2 = 0.1;

    Eigen::MatrixXd gW;
    Eigen::VectorXd gb;
    detail::logistic_gradient(W, b, X, y, l2, &gW, &gb);

    const double h = 1e-6;
    auto check_entry = [&](double analytic, double numeric) {
      const double rel = std::fabs(analytic - numeric) /
                         std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      worst = std::max(worst, rel);
    };
    for (int c = 0; c < C; ++c) {
      for (int j = 0; j < d; ++j) {
        Eigen::MatrixXd Wp = W, Wm = W;
        Wp(c, j) += h;
        Wm(c, j) -= h;
        const double fd = (detail::logistic_loss(Wp, b, X, y, l2) -
                           detail::logistic_loss(Wm, b, X, y, l2)) /
                          (2 * h);
        check_entry(gW(c, j), fd);
      }
      Eigen::VectorXd bp = b, bm = b;
      bp[c] += h;
      bm[c] -= h;
      const double fd = (detail::logistic_loss(W, bp, X, y, l2) -
                         detail::logistic_loss(W, bm, X, y, l2)) /
                        (2 * h);
      check_entry(gb[c], fd);
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("fit does not increase the loss relative to the zero model") {
  oracle::Splitmix rng(3);
  const Eigen::MatrixXd X = random_matrix(40, 4, rng);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) y[i] = rng.below(3);
  ThetaClf theta;
  theta.l2 = 0.05;
  const LinearClassifier m = fit_logistic(X, y, 3, theta, 0);
  const double loss_zero = detail::logistic_loss(
      Eigen::MatrixXd::Zero(3, 4), Eigen::VectorXd::Zero(3), X, y, theta.l2);
  const double loss_fit = detail::logistic_loss(m.W, m.b, X, y, theta.l2);
  CHECK(loss_fit <= loss_zero + 1e-12);
}

TEST_CASE("uniform posteriors from the zero model") {
  LinearClassifier m;
  m.num_classes = 3;
  m.W = Eigen::MatrixXd::Zero(3, 2);
  m.b = Eigen::VectorXd::Zero(3);
  const Eigen::MatrixXd P = m.predict_proba(Eigen::MatrixXd::Random(5, 2));
  for (int i = 0; i < 5; ++i)
    for (int c = 0; c < 3; ++c)
      CHECK(P(i, c) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("saturated logits produce a near-one-hot posterior") {
  LinearClassifier m;
  m.num_classes = 2;
  m.W = Eigen::MatrixXd::Zero(2, 1);
  m.W(0, 0) = 10.0;
  m.W(1, 0) = -10.0;
  m.b = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd q(1, 1);
  q << 1.0;
  const Eigen::MatrixXd P = m.predict_proba(q);
  CHECK(P(0, 0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(P(0, 1) == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("posterior rows sum to one") {
  oracle::Splitmix rng(17);
  const Eigen::MatrixXd X = random_matrix(1000, 5, rng);
  std::vector<int> y(60);
  const Eigen::MatrixXd Xtr = random_matrix(60, 5, rng);
  for (int i = 0; i < 60; ++i) y[i] = rng.below(4);
  const LinearClassifier m = fit_logistic(Xtr, y, 4, ThetaClf{}, 0);
  const Eigen::MatrixXd P = m.predict_proba(X);
  for (int i = 0; i < P.rows(); ++i)
    CHECK(std::fabs(P.row(i).sum() - 1.0) < 1e-9);
}

TEST_CASE("predict_proba rejects dimension mismatches") {
  LinearClassifier m;
  m.num_classes = 2;
  m.W = Eigen::MatrixXd::Zero(2, 3);
  m.b = Eigen::VectorXd::Zero(2);
  CHECK_THROWS(m.predict_proba(Eigen::MatrixXd::Zero(1, 2)));
}

TEST_CASE("absent classes stay at initialization") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, 2, 1, -1, 0, -2, 1;
  const std::vector<int> y{0, 0, 1, 1};  // class 2 absent
  const LinearClassifier m = fit_logistic(X, y, 3, ThetaClf{}, 0);
  CHECK(m.W.row(2).norm() == 0.0);
  CHECK(m.b[2] == 0.0);
  const Eigen::MatrixXd P = m.predict_proba(X);
  for (int i = 0; i < 4; ++i) CHECK(P(i, 2) > 0.0);  // softmax over all logits
}

TEST_CASE("row permutation leaves the fit unchanged") {
  oracle::Splitmix rng(29);
  const Eigen::MatrixXd X = random_matrix(30, 3, rng);
  std::vector<int> y(30);
  for (int i = 0; i < 30; ++i) y[i] = rng.below(2);
  const LinearClassifier a = fit_logistic(X, y, 2, ThetaClf{}, 0);

  std::vector<int> perm(30);
  for (int i = 0; i < 30; ++i) perm[i] = i;
  for (int i = 29; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  Eigen::MatrixXd Xp(30, 3);
  std::vector<int> yp(30);
  for (int i = 0; i < 30; ++i) {
    Xp.row(i) = X.row(perm[i]);
    yp[i] = y[perm[i]];
  }
  const LinearClassifier b = fit_logistic(Xp, yp, 2, ThetaClf{}, 0);
  CHECK((a.W - b.W).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a.b - b.b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("affine consistency of the prediction path") {
  oracle::Splitmix rng(31);
  const Eigen::MatrixXd X = random_matrix(20, 3, rng);
  std::vector<int> y(20);
  for (int i = 0; i < 20; ++i) y[i] = rng.below(2);
  ThetaClf theta;
  theta.l2 = 1e-10;
  const LinearClassifier m = fit_logistic(X, y, 2, theta, 0);

  const double c = 3.7;
  LinearClassifier scaled = m;
  scaled.W /= c;
  const Eigen::MatrixXd P1 = m.predict_proba(X);
  const Eigen::MatrixXd P2 = scaled.predict_proba(X * c);
  CHECK((P1 - P2).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("temperature calibration path runs and keeps posteriors valid") {
  oracle::Splitmix rng(37);
  const Eigen::MatrixXd X = random_matrix(50, 3, rng);
  std::vector<int> y(50);
  for (int i = 0; i < 50; ++i) y[i] = rng.below(2);
  ThetaClf theta;
  theta.calibrate = true;
  const LinearClassifier m = fit_logistic(X, y, 2, theta, 123);
  CHECK(m.temperature > 0.0);
  const Eigen::MatrixXd P = m.predict_proba(X);
  for (int i = 0; i < P.rows(); ++i)
    CHECK(std::fabs(P.row(i).sum() - 1.0) < 1e-9);
}

TEST_CASE("linear SVM reference: separable sign and shrinking weights") {
  Eigen::MatrixXd X(2, 1);
  X << -1.0, 1.0;
  const std::vector<int> y{0, 1};
  const LinearClassifier m = fit_linear_svm_reference(X, y, 2, 1.0, 0);
  Eigen::MatrixXd q(1, 1);
  q << 1.0;
  CHECK(m.predict(q)[0] == 1);

  const LinearClassifier weak = fit_linear_svm_reference(X, y, 2, 1e-8, 0);
  CHECK(weak.W.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("linear SVM agrees with logistic regression on a separable blob") {
  oracle::Splitmix rng(41);
  const int n = 50;
  Eigen::MatrixXd X(n, 2);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 2;
    const double cx = y[i] == 0 ? -2.0 : 2.0;
    X(i, 0) = cx + rng.uniform() - 0.5;
    X(i, 1) = cx + rng.uniform() - 0.5;
  }
  const LinearClassifier lr = fit_logistic(X, y, 2, ThetaClf{}, 0);
  const LinearClassifier svm = fit_linear_svm_reference(X, y, 2, 1.0, 0);
  const auto pl = lr.predict(X);
  const auto ps = svm.predict(X);
  int agree = 0;
  for (int i = 0; i < n; ++i) agree += pl[i] == ps[i];
  CHECK(agree >= 48);  // >= 95%
}

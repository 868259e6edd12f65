#include "evossl/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evossl/rng.hpp"

namespace evossl {

namespace {

Eigen::MatrixXd softmax_rows(Eigen::MatrixXd logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - m).exp();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

std::vector<bool> present_classes(const std::vector<int>& y, int num_classes) {
  std::vector<bool> present(num_classes, false);
  for (int label : y) {
    if (label < 0 || label >= num_classes)
      throw std::invalid_argument("label out of range");
    present[label] = true;
  }
  return present;
}

}  // namespace

Eigen::MatrixXd LinearClassifier::predict_proba(const Eigen::MatrixXd& X) const {
  if (X.cols() != W.cols())
    throw std::invalid_argument("predict_proba: dimension mismatch");
  Eigen::MatrixXd logits = X * W.transpose();
  logits.rowwise() += b.transpose();
  if (temperature != 1.0) logits /= std::max(temperature, 1e-8);
  return softmax_rows(std::move(logits));
}

std::vector<int> LinearClassifier::predict(const Eigen::MatrixXd& X) const {
  const Eigen::MatrixXd P = predict_proba(X);
  std::vector<int> out(P.rows());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
      if (P(i, c) > P(i, best)) best = c;  // ties keep the lower class
    out[i] = best;
  }
  return out;
}

namespace detail {

double logistic_loss(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                     const Eigen::MatrixXd& X, const std::vector<int>& y,
                     double l2) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd logits = X * W.transpose();
  logits.rowwise() += b.transpose();
  double nll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    nll += lse - logits(i, y[i]);
  }
  return nll / static_cast<double>(n) + 0.5 * l2 * W.squaredNorm();
}

void logistic_gradient(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                       const Eigen::MatrixXd& X, const std::vector<int>& y,
                       double l2, Eigen::MatrixXd* gW, Eigen::VectorXd* gb) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd logits = X * W.transpose();
  logits.rowwise() += b.transpose();
  Eigen::MatrixXd P = softmax_rows(std::move(logits));
  for (Eigen::Index i = 0; i < n; ++i) P(i, y[i]) -= 1.0;  // P - Y
  *gW = (P.transpose() * X) / static_cast<double>(n) + l2 * W;
  *gb = P.colwise().sum().transpose() / static_cast<double>(n);
}

}  // namespace detail

LinearClassifier fit_logistic(const Eigen::MatrixXd& X,
                              const std::vector<int>& y, int num_classes,
                              const ThetaClf& theta, std::uint64_t seed,
                              double tol) {
  if (X.rows() == 0) throw std::invalid_argument("fit_logistic: empty training set");
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw std::invalid_argument("fit_logistic: X/y size mismatch");
  if (theta.l2 <= 0.0) throw std::invalid_argument("fit_logistic: l2 must be > 0");
  const std::vector<bool> present = present_classes(y, num_classes);

  Eigen::MatrixXd Xtr = X;
  std::vector<int> ytr = y;
  std::vector<Eigen::Index> holdout;

  if (theta.calibrate) {
    // Per-class 20% holdout for temperature fitting; classes with a single
    // sample stay entirely in the training part.
    Rng rng(hash_mix({seed, 0xca11bULL}));
    std::vector<std::vector<Eigen::Index>> by_class(num_classes);
    for (Eigen::Index i = 0; i < X.rows(); ++i) by_class[y[i]].push_back(i);
    std::vector<Eigen::Index> train;
    for (auto& idxs : by_class) {
      rng.shuffle(idxs);
      const std::size_t h =
          idxs.size() >= 2 ? static_cast<std::size_t>(idxs.size() / 5) : 0;
      for (std::size_t i = 0; i < idxs.size(); ++i)
        (i < h ? holdout : train).push_back(idxs[i]);
    }
    if (!holdout.empty()) {
      std::sort(train.begin(), train.end());
      std::sort(holdout.begin(), holdout.end());
      Xtr.resize(static_cast<Eigen::Index>(train.size()), X.cols());
      ytr.resize(train.size());
      for (std::size_t i = 0; i < train.size(); ++i) {
        Xtr.row(static_cast<Eigen::Index>(i)) = X.row(train[i]);
        ytr[i] = y[train[i]];
      }
    }
  }

  LinearClassifier model;
  model.num_classes = num_classes;
  model.W = Eigen::MatrixXd::Zero(num_classes, X.cols());
  model.b = Eigen::VectorXd::Zero(num_classes);

  double step = 1.0;
  Eigen::MatrixXd gW;
  Eigen::VectorXd gb;
  double loss = detail::logistic_loss(model.W, model.b, Xtr, ytr, theta.l2);
  for (int epoch = 0; epoch < theta.max_epochs; ++epoch) {
    detail::logistic_gradient(model.W, model.b, Xtr, ytr, theta.l2, &gW, &gb);
    for (int c = 0; c < num_classes; ++c) {
      if (!present[c]) {
        gW.row(c).setZero();  // absent classes stay at initialization
        gb[c] = 0.0;
      }
    }
    const double gsq = gW.squaredNorm() + gb.squaredNorm();
    if (std::sqrt(gsq) < tol) break;

    // Armijo backtracking.
    bool accepted = false;
    while (step > 1e-14) {
      const Eigen::MatrixXd Wn = model.W - step * gW;
      const Eigen::VectorXd bn = model.b - step * gb;
      const double next = detail::logistic_loss(Wn, bn, Xtr, ytr, theta.l2);
      if (next <= loss - 1e-4 * step * gsq) {
        model.W = Wn;
        model.b = bn;
        loss = next;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step = std::min(step * 2.0, 1e4);
  }

  if (theta.calibrate && !holdout.empty()) {
    // Golden-section search over log10 temperature in [-1, 1].
    auto holdout_nll = [&](double temp) {
      double nll = 0.0;
      for (Eigen::Index idx : holdout) {
        Eigen::VectorXd z = (model.W * X.row(idx).transpose() + model.b) / temp;
        const double m = z.maxCoeff();
        const double lse = m + std::log((z.array() - m).exp().sum());
        nll += lse - z[y[idx]];
      }
      return nll;
    };
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = -1.0, hi = 1.0;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = holdout_nll(std::pow(10.0, x1));
    double f2 = holdout_nll(std::pow(10.0, x2));
    for (int it = 0; it < 40; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = holdout_nll(std::pow(10.0, x1));
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = holdout_nll(std::pow(10.0, x2));
      }
    }
    model.temperature = std::pow(10.0, 0.5 * (lo + hi));
  }
  return model;
}

LinearClassifier fit_linear_svm_reference(const Eigen::MatrixXd& X,
                                          const std::vector<int>& y,
                                          int num_classes, double c_reg,
                                          std::uint64_t /*seed*/) {
  if (X.rows() == 0) throw std::invalid_argument("fit_svm: empty training set");
  if (static_cast<std::size_t>(X.rows()) != y.size())
    throw std::invalid_argument("fit_svm: X/y size mismatch");
  const std::vector<bool> present = present_classes(y, num_classes);
  const Eigen::Index n = X.rows();

  LinearClassifier model;
  model.num_classes = num_classes;
  model.W = Eigen::MatrixXd::Zero(num_classes, X.cols());
  model.b = Eigen::VectorXd::Zero(num_classes);

  constexpr int kEpochs = 300;
  for (int c = 0; c < num_classes; ++c) {
    if (!present[c]) continue;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(X.cols());
    double bias = 0.0;
    Eigen::VectorXd sign(n);
    for (Eigen::Index i = 0; i < n; ++i) sign[i] = y[i] == c ? 1.0 : -1.0;
    for (int t = 0; t < kEpochs; ++t) {
      const Eigen::VectorXd scores = X * w + Eigen::VectorXd::Constant(n, bias);
      Eigen::VectorXd gw = w;  // d/dw of 0.5*||w||^2
      double gbias = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (sign[i] * scores[i] < 1.0) {
          gw -= (c_reg / static_cast<double>(n)) * sign[i] *
                X.row(i).transpose();
          gbias -= (c_reg / static_cast<double>(n)) * sign[i];
        }
      }
      const double eta = 1.0 / (1.0 + static_cast<double>(t));
      w -= eta * gw;
      bias -= eta * gbias;
    }
    model.W.row(c) = w.transpose();
    model.b[c] = bias;
  }
  return model;
}

}  // namespace evossl

#pragma once

// Regularized multinomial logistic regression (the base learner) and a
// one-vs-rest linear SVM used as a supervised reference. Both are trained by
// deterministic full-batch optimizers so repeated fits are bit-identical.

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace evossl {

struct ThetaClf {
  double l2 = 1e-2;       // ridge strength, > 0
  int max_epochs = 200;   // gradient-descent step budget
  bool calibrate = false; // temperature scaling on a 20% holdout

  bool operator==(const ThetaClf&) const = default;
};

struct LinearClassifier {
  Eigen::MatrixXd W;  // num_classes x dim
  Eigen::VectorXd b;  // num_classes
  double temperature = 1.0;
  int num_classes = 0;

  Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& X) const;
  std::vector<int> predict(const Eigen::MatrixXd& X) const;
};

// Mean cross-entropy + (l2/2)*||W||^2, minimized by gradient descent with
// backtracking line search. Classes absent from y keep their initialization
// (zeros); posteriors are softmax over all num_classes logits.
LinearClassifier fit_logistic(const Eigen::MatrixXd& X,
                              const std::vector<int>& y, int num_classes,
                              const ThetaClf& theta, std::uint64_t seed,
                              double tol = 1e-6);

// One-vs-rest hinge loss: c_reg * mean hinge + 0.5*||w||^2 per class,
// subgradient descent with a fixed decaying step schedule. Decision scores
// are softmaxed into pseudo-posteriors for uniform reporting.
LinearClassifier fit_linear_svm_reference(const Eigen::MatrixXd& X,
                                          const std::vector<int>& y,
                                          int num_classes, double c_reg,
                                          std::uint64_t seed);

namespace detail {
// Exposed for gradient verification.
double logistic_loss(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                     const Eigen::MatrixXd& X, const std::vector<int>& y,
                     double l2);
void logistic_gradient(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                       const Eigen::MatrixXd& X, const std::vector<int>& y,
                       double l2, Eigen::MatrixXd* gW, Eigen::VectorXd* gb);
}  // namespace detail

}  // namespace evossl

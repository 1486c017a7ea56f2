#include "motlab/signal_space.hpp"

#include <random>
#include <stdexcept>
#include <string>

#include "motlab/random.hpp"

namespace motlab {

Eigen::MatrixXd SignalDictionary::all_signals() const {
  Eigen::MatrixXd all(dim, 2 * num_classes);
  all << class_signals, cls_signals;
  return all;
}

double SignalDictionary::orthonormality_error() const {
  const Eigen::MatrixXd all = all_signals();
  const Eigen::MatrixXd gram = all.transpose() * all;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

SignalDictionary build_dictionary(int dim, int num_classes, std::uint64_t seed) {
  if (num_classes < 1) {
    throw std::invalid_argument("build_dictionary: num_classes must be positive");
  }
  if (dim < 2 * num_classes) {
    throw std::invalid_argument("build_dictionary: dimension too small (dim=" + std::to_string(dim) +
                                " < 2*num_classes=" + std::to_string(2 * num_classes) + ")");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd draw(dim, 2 * num_classes);
  for (Eigen::Index j = 0; j < draw.cols(); ++j) {
    for (Eigen::Index i = 0; i < draw.rows(); ++i) draw(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(draw);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, 2 * num_classes);

  SignalDictionary dict;
  dict.dim = dim;
  dict.num_classes = num_classes;
  dict.class_signals = q.leftCols(num_classes);
  dict.cls_signals = q.rightCols(num_classes);
  return dict;
}

SignalDictionary canonical_basis_dictionary(int num_classes) {
  if (num_classes < 1) {
    throw std::invalid_argument("canonical_basis_dictionary: num_classes must be positive");
  }
  const int dim = 2 * num_classes;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
  SignalDictionary dict;
  dict.dim = dim;
  dict.num_classes = num_classes;
  dict.class_signals = eye.leftCols(num_classes);
  dict.cls_signals = eye.rightCols(num_classes);
  return dict;
}

}  // namespace motlab

#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace motlab {

/// Orthonormal class signals c_n and classification signals v_n in R^d.
///
/// Columns of `class_signals` are the c_n, columns of `cls_signals` the v_n.
/// Class indices are zero-based throughout the library.
struct SignalDictionary {
  int dim = 0;
  int num_classes = 0;
  Eigen::MatrixXd class_signals;  // d x N
  Eigen::MatrixXd cls_signals;    // d x N

  Eigen::VectorXd class_signal(int n) const { return class_signals.col(n); }
  Eigen::VectorXd cls_signal(int n) const { return cls_signals.col(n); }

  /// All 2N vectors side by side: [c_1 .. c_N, v_1 .. v_N].
  Eigen::MatrixXd all_signals() const;

  /// Largest deviation of the 2N x 2N Gram matrix from the identity.
  double orthonormality_error() const;
};

/// Gaussian draw followed by column orthonormalization (Householder QR).
/// Throws std::invalid_argument when dim < 2 * num_classes.
SignalDictionary build_dictionary(int dim, int num_classes, std::uint64_t seed);

/// d = 2N, c_n = e_n, v_n = e_{N+n}.
SignalDictionary canonical_basis_dictionary(int num_classes);

}  // namespace motlab

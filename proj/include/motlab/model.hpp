#pragma once

#include <vector>

#include <Eigen/Dense>

#include "motlab/datagen.hpp"
#include "motlab/random.hpp"

namespace motlab {

/// One transformer expert with merged parameters: `w` is the value+FFN head
/// and `w_kq` the key-query matrix.
struct ExpertParams {
  Eigen::VectorXd w;     // d
  Eigen::MatrixXd w_kq;  // d x d
};

struct ModelState {
  Eigen::MatrixXd theta;  // d x M, column i gates expert i
  std::vector<ExpertParams> experts;
  int epoch = 0;

  int num_experts() const { return static_cast<int>(experts.size()); }
  int dim() const { return static_cast<int>(theta.rows()); }
};

/// Draws an expert with i.i.d. N(0, sigma0^2 / d) entries.
ExpertParams init_expert(int dim, double sigma0, Rng& rng);

/// theta = 0, experts drawn with init_expert in index order.
ModelState init_model(int dim, int num_experts, double sigma0, Rng& rng);

/// h = Theta^T (sum_l X_l).
Eigen::VectorXd gate_outputs(const Eigen::MatrixXd& theta, const Sample& sample);

/// Max-shifted softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

struct RoutingOutcome {
  int selected = 0;
  Eigen::VectorXd gate_outputs;
  Eigen::VectorXd gate_probs;
  Eigen::VectorXd noise;
};

/// Top-1 routing with r_i ~ U[0, noise_scale]; ties go to the lowest index.
RoutingOutcome route(const Eigen::MatrixXd& theta, const Sample& sample, Rng& rng, double noise_scale);

/// Same as route() with a caller-supplied perturbation vector.
RoutingOutcome route_with_noise(const Eigen::MatrixXd& theta, const Sample& sample,
                                const Eigen::VectorXd& noise);

/// Intermediates of one expert's forward pass on one sample.
struct ForwardTrace {
  Eigen::MatrixXd attention;  // L x L, column l = softmax(X^T W_KQ X_l)
  Eigen::VectorXd values;     // L, entries W^T X_h
  double output = 0.0;
};

ForwardTrace expert_trace(const ExpertParams& expert, const Sample& sample);

/// f = sum_l W^T X softmax(X^T W_KQ X_l).
double expert_forward(const ExpertParams& expert, const Sample& sample);

/// Entry `position` of softmax(X^T W_KQ query).
double attention_score(const ExpertParams& expert, const Sample& sample, const Eigen::VectorXd& query,
                       int position);

/// Column-wise softmax of a score matrix.
Eigen::MatrixXd column_softmax(const Eigen::MatrixXd& scores);

}  // namespace motlab

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "motlab/datagen.hpp"
#include "motlab/model.hpp"

namespace motlab {

using Routes = std::vector<RoutingOutcome>;

/// log(1 + exp(-z)), evaluated without overflow.
double logistic_loss(double z);
/// d/dz log(1 + exp(-z)) = -1 / (1 + exp(z)).
double logistic_loss_grad(double z);

struct LossBreakdown {
  double router_loss = 0.0;
  double expert_loss = 0.0;
  /// Mean expert loss over each expert's routed subset; empty when nothing was routed.
  std::vector<std::optional<double>> per_expert_loss;
  std::vector<int> routed_counts;
  /// y_k * f_k for every sample, in corpus order.
  std::vector<double> margins;
};

/// Mean of l(y f pi_m) over the corpus.
double router_loss(const ModelState& model, const Corpus& corpus, const Routes& routes);

/// Expert loss, per-expert means and the router loss from one forward sweep.
LossBreakdown expert_loss(const ModelState& model, const Corpus& corpus, const Routes& routes);

struct GradientSet {
  Eigen::MatrixXd d_theta;             // d x M
  std::vector<Eigen::VectorXd> d_w;    // M x (d)
  std::vector<Eigen::MatrixXd> d_wkq;  // M x (d x d)
};

// Routing decisions are constants here: gradients flow through pi and f only.
Eigen::MatrixXd grad_theta(const ModelState& model, const Corpus& corpus, const Routes& routes);
std::vector<Eigen::VectorXd> grad_w(const ModelState& model, const Corpus& corpus, const Routes& routes);
std::vector<Eigen::MatrixXd> grad_wkq(const ModelState& model, const Corpus& corpus, const Routes& routes);

/// Router gradient given each sample's routed-expert output f_k. Shared by
/// every gated architecture.
Eigen::MatrixXd router_gradient(const Corpus& corpus, const Routes& routes,
                                const std::vector<double>& outputs, int num_experts);

/// All three gradients from a single forward sweep, accumulated in corpus order.
GradientSet compute_gradients(const ModelState& model, const Corpus& corpus, const Routes& routes);

/// Per-sample contributions to the expert-loss gradient of one expert, given
/// the outer factor dL/df already folded into `scale`.
void accumulate_expert_grad(const Sample& sample, const ForwardTrace& trace, double scale,
                            Eigen::VectorXd* d_w, Eigen::MatrixXd* d_wkq);

/// Copy of `routes` with gate outputs and probabilities recomputed under
/// `theta`; the selected experts and noise draws are kept.
Routes regate(const Eigen::MatrixXd& theta, const Corpus& corpus, const Routes& routes);

using BlockLoss = std::function<double(const Eigen::MatrixXd&)>;

/// Central differences (loss(p + h e) - loss(p - h e)) / 2h for every entry of `block`.
Eigen::MatrixXd finite_diff_oracle(const BlockLoss& loss, const Eigen::MatrixXd& block, double step);

}  // namespace motlab

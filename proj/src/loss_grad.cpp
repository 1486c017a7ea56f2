#include "motlab/loss_grad.hpp"

#include <cmath>
#include <stdexcept>

namespace motlab {
namespace {

void check_routes(const Corpus& corpus, const Routes& routes) {
  if (routes.size() != corpus.samples.size()) {
    throw std::invalid_argument("routes must hold one entry per corpus sample");
  }
}

}  // namespace

double logistic_loss(double z) { return std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double logistic_loss_grad(double z) { return -1.0 / (1.0 + std::exp(z)); }

double router_loss(const ModelState& model, const Corpus& corpus, const Routes& routes) {
  check_routes(corpus, routes);
  double total = 0.0;
  for (std::size_t k = 0; k < routes.size(); ++k) {
    const auto& s = corpus.samples[k];
    const int m = routes[k].selected;
    const double f = expert_forward(model.experts[m], s);
    total += logistic_loss(s.label * f * routes[k].gate_probs(m));
  }
  return total / static_cast<double>(corpus.size());
}

LossBreakdown expert_loss(const ModelState& model, const Corpus& corpus, const Routes& routes) {
  check_routes(corpus, routes);
  const int num_experts = model.num_experts();
  LossBreakdown out;
  out.routed_counts.assign(num_experts, 0);
  out.margins.reserve(routes.size());
  std::vector<double> sums(num_experts, 0.0);
  double router_total = 0.0;
  double expert_total = 0.0;
  for (std::size_t k = 0; k < routes.size(); ++k) {
    const auto& s = corpus.samples[k];
    const int m = routes[k].selected;
    const double f = expert_forward(model.experts[m], s);
    const double loss = logistic_loss(s.label * f);
    out.margins.push_back(s.label * f);
    expert_total += loss;
    router_total += logistic_loss(s.label * f * routes[k].gate_probs(m));
    sums[m] += loss;
    ++out.routed_counts[m];
  }
  const double k_total = static_cast<double>(corpus.size());
  out.expert_loss = expert_total / k_total;
  out.router_loss = router_total / k_total;
  out.per_expert_loss.resize(num_experts);
  for (int i = 0; i < num_experts; ++i) {
    if (out.routed_counts[i] > 0) out.per_expert_loss[i] = sums[i] / out.routed_counts[i];
  }
  return out;
}

void accumulate_expert_grad(const Sample& sample, const ForwardTrace& trace, double scale,
                            Eigen::VectorXd* d_w, Eigen::MatrixXd* d_wkq) {
  const Eigen::MatrixXd& x = sample.tokens;
  if (d_w != nullptr) {
    // df/dW = X sum_l p_l
    d_w->noalias() += scale * (x * trace.attention.rowwise().sum());
  }
  if (d_wkq != nullptr) {
    // df/dW_KQ = sum_l X (diag(p_l) - p_l p_l^T) X^T W X_l^T = X G X^T with
    // column l of G equal to the softmax Jacobian applied to the values.
    const Eigen::Index len = trace.attention.cols();
    Eigen::MatrixXd jac_values(len, len);
    for (Eigen::Index l = 0; l < len; ++l) {
      const auto p = trace.attention.col(l);
      jac_values.col(l) = p.cwiseProduct(trace.values) - p * p.dot(trace.values);
    }
    d_wkq->noalias() += scale * (x * jac_values * x.transpose());
  }
}

Eigen::MatrixXd router_gradient(const Corpus& corpus, const Routes& routes,
                                const std::vector<double>& outputs, int num_experts) {
  check_routes(corpus, routes);
  const double inv_k = 1.0 / static_cast<double>(corpus.size());
  Eigen::MatrixXd d_theta = Eigen::MatrixXd::Zero(corpus.dictionary.dim, num_experts);
  for (std::size_t k = 0; k < routes.size(); ++k) {
    const auto& s = corpus.samples[k];
    const auto& r = routes[k];
    const int m = r.selected;
    const double yf = s.label * outputs[k];
    const double pi_m = r.gate_probs(m);
    // l'(y f pi_m) y f pi_m (1{i=m} - pi_i) sum_l X_l
    const double coef = logistic_loss_grad(yf * pi_m) * yf * pi_m * inv_k;
    Eigen::VectorXd indicator_minus_pi = -r.gate_probs;
    indicator_minus_pi(m) += 1.0;
    d_theta.noalias() += coef * s.token_sum * indicator_minus_pi.transpose();
  }
  return d_theta;
}

GradientSet compute_gradients(const ModelState& model, const Corpus& corpus, const Routes& routes) {
  check_routes(corpus, routes);
  const int d = model.dim();
  const int num_experts = model.num_experts();
  const double inv_k = 1.0 / static_cast<double>(corpus.size());
  GradientSet g;
  std::vector<double> outputs(routes.size());
  g.d_w.assign(num_experts, Eigen::VectorXd::Zero(d));
  g.d_wkq.assign(num_experts, Eigen::MatrixXd::Zero(d, d));
  for (std::size_t k = 0; k < routes.size(); ++k) {
    const auto& s = corpus.samples[k];
    const int m = routes[k].selected;
    const ForwardTrace trace = expert_trace(model.experts[m], s);
    const double f = trace.output;
    const double y = s.label;
    outputs[k] = f;
    // l'(y f) y df/dparams, only for the routed expert.
    const double expert_coef = logistic_loss_grad(y * f) * y * inv_k;
    accumulate_expert_grad(s, trace, expert_coef, &g.d_w[m], &g.d_wkq[m]);
  }
  g.d_theta = router_gradient(corpus, routes, outputs, num_experts);
  return g;
}

Eigen::MatrixXd grad_theta(const ModelState& model, const Corpus& corpus, const Routes& routes) {
  return compute_gradients(model, corpus, routes).d_theta;
}

std::vector<Eigen::VectorXd> grad_w(const ModelState& model, const Corpus& corpus, const Routes& routes) {
  return compute_gradients(model, corpus, routes).d_w;
}

std::vector<Eigen::MatrixXd> grad_wkq(const ModelState& model, const Corpus& corpus, const Routes& routes) {
  return compute_gradients(model, corpus, routes).d_wkq;
}

Routes regate(const Eigen::MatrixXd& theta, const Corpus& corpus, const Routes& routes) {
  check_routes(corpus, routes);
  Routes out = routes;
  for (std::size_t k = 0; k < routes.size(); ++k) {
    out[k].gate_outputs = gate_outputs(theta, corpus.samples[k]);
    out[k].gate_probs = softmax(out[k].gate_outputs);
  }
  return out;
}

Eigen::MatrixXd finite_diff_oracle(const BlockLoss& loss, const Eigen::MatrixXd& block, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_oracle: step must be positive");
  Eigen::MatrixXd grad(block.rows(), block.cols());
  Eigen::MatrixXd probe = block;
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      const double orig = probe(i, j);
      probe(i, j) = orig + step;
      const double up = loss(probe);
      probe(i, j) = orig - step;
      const double down = loss(probe);
      probe(i, j) = orig;
      grad(i, j) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

}  // namespace motlab

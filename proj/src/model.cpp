#include "motlab/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace motlab {
namespace {

void check_dims(const Eigen::Index rows, const Sample& sample, const char* where) {
  if (rows != sample.tokens.rows()) {
    throw std::invalid_argument(std::string(where) + ": dimension mismatch");
  }
}

}  // namespace

ExpertParams init_expert(int dim, double sigma0, Rng& rng) {
  std::normal_distribution<double> normal(0.0, sigma0 / std::sqrt(static_cast<double>(dim)));
  ExpertParams e;
  e.w.resize(dim);
  for (int i = 0; i < dim; ++i) e.w(i) = normal(rng);
  e.w_kq.resize(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) e.w_kq(i, j) = normal(rng);
  }
  return e;
}

ModelState init_model(int dim, int num_experts, double sigma0, Rng& rng) {
  if (num_experts < 1) throw std::invalid_argument("init_model: need at least one expert");
  ModelState m;
  m.theta = Eigen::MatrixXd::Zero(dim, num_experts);
  m.experts.reserve(num_experts);
  for (int i = 0; i < num_experts; ++i) m.experts.push_back(init_expert(dim, sigma0, rng));
  return m;
}

Eigen::VectorXd gate_outputs(const Eigen::MatrixXd& theta, const Sample& sample) {
  check_dims(theta.rows(), sample, "gate_outputs");
  return theta.transpose() * sample.token_sum;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::MatrixXd column_softmax(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index j = 0; j < scores.cols(); ++j) out.col(j) = softmax(scores.col(j));
  return out;
}

RoutingOutcome route_with_noise(const Eigen::MatrixXd& theta, const Sample& sample,
                                const Eigen::VectorXd& noise) {
  RoutingOutcome out;
  out.gate_outputs = gate_outputs(theta, sample);
  out.noise = noise;
  out.gate_probs = softmax(out.gate_outputs);
  const Eigen::VectorXd scores = out.gate_outputs + noise;
  // maxCoeff returns the first maximal index.
  Eigen::Index best = 0;
  scores.maxCoeff(&best);
  out.selected = static_cast<int>(best);
  return out;
}

RoutingOutcome route(const Eigen::MatrixXd& theta, const Sample& sample, Rng& rng, double noise_scale) {
  if (noise_scale < 0.0) throw std::invalid_argument("route: noise_scale must be nonnegative");
  Eigen::VectorXd noise = Eigen::VectorXd::Zero(theta.cols());
  if (noise_scale > 0.0) {
    std::uniform_real_distribution<double> uni(0.0, noise_scale);
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = uni(rng);
  }
  return route_with_noise(theta, sample, noise);
}

ForwardTrace expert_trace(const ExpertParams& expert, const Sample& sample) {
  check_dims(expert.w.size(), sample, "expert_forward");
  const Eigen::MatrixXd& x = sample.tokens;
  ForwardTrace t;
  t.attention = column_softmax(x.transpose() * (expert.w_kq * x));
  t.values = x.transpose() * expert.w;
  t.output = t.values.dot(t.attention.rowwise().sum());
  return t;
}

double expert_forward(const ExpertParams& expert, const Sample& sample) {
  return expert_trace(expert, sample).output;
}

double attention_score(const ExpertParams& expert, const Sample& sample, const Eigen::VectorXd& query,
                       int position) {
  check_dims(expert.w_kq.rows(), sample, "attention_score");
  if (position < 0 || position >= sample.num_tokens()) {
    throw std::out_of_range("attention_score: position out of range");
  }
  const Eigen::VectorXd p = softmax(sample.tokens.transpose() * (expert.w_kq * query));
  return p(position);
}

}  // namespace motlab

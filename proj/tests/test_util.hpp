#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "motlab/datagen.hpp"
#include "motlab/loss_grad.hpp"
#include "motlab/model.hpp"
#include "motlab/random.hpp"
#include "motlab/signal_space.hpp"

namespace testutil {

using namespace motlab;

inline Corpus small_corpus(int dim = 8, int num_classes = 2, int num_tokens = 4, double noise = 0.3,
                           int spt = 1, std::uint64_t seed = 7) {
  return build_corpus(build_dictionary(dim, num_classes, seed), num_tokens, noise, spt, seed + 1);
}

/// Model with O(1) random entries everywhere, including Theta.
inline ModelState random_model(int dim, int num_experts, Rng& rng) {
  ModelState m = init_model(dim, num_experts, std::sqrt(static_cast<double>(dim)), rng);
  std::normal_distribution<double> normal;
  m.theta = Eigen::MatrixXd::NullaryExpr(dim, num_experts, [&] { return normal(rng); });
  return m;
}

inline Routes route_all(const ModelState& m, const Corpus& c, Rng& rng, double noise = 1.0) {
  Routes r;
  for (const auto& s : c.samples) r.push_back(route(m.theta, s, rng, noise));
  return r;
}

// Scalar-loop reference implementations.

inline double naive_forward(const ExpertParams& e, const Sample& s) {
  const int d = s.dim(), L = s.num_tokens();
  double f = 0.0;
  for (int l = 0; l < L; ++l) {
    std::vector<double> logits(L);
    double mx = -INFINITY;
    for (int j = 0; j < L; ++j) {
      double v = 0.0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) v += s.tokens(a, j) * e.w_kq(a, b) * s.tokens(b, l);
      logits[j] = v;
      mx = std::max(mx, v);
    }
    double z = 0.0;
    for (double& v : logits) z += (v = std::exp(v - mx));
    for (int j = 0; j < L; ++j) {
      double wx = 0.0;
      for (int a = 0; a < d; ++a) wx += e.w(a) * s.tokens(a, j);
      f += wx * logits[j] / z;
    }
  }
  return f;
}

inline double naive_logistic(double z) { return std::log1p(std::exp(-z)); }

inline double naive_router_loss(const ModelState& m, const Corpus& c, const Routes& r) {
  double total = 0.0;
  for (std::size_t k = 0; k < c.samples.size(); ++k) {
    const auto& s = c.samples[k];
    const int sel = r[k].selected;
    std::vector<double> h(m.num_experts(), 0.0);
    for (int i = 0; i < m.num_experts(); ++i)
      for (int l = 0; l < s.num_tokens(); ++l)
        for (int a = 0; a < s.dim(); ++a) h[i] += m.theta(a, i) * s.tokens(a, l);
    double z = 0.0;
    for (double v : h) z += std::exp(v);
    const double pi = std::exp(h[sel]) / z;
    total += naive_logistic(s.label * naive_forward(m.experts[sel], s) * pi);
  }
  return total / c.samples.size();
}

inline double naive_expert_loss(const ModelState& m, const Corpus& c, const Routes& r) {
  double total = 0.0;
  for (std::size_t k = 0; k < c.samples.size(); ++k) {
    const auto& s = c.samples[k];
    total += naive_logistic(s.label * naive_forward(m.experts[r[k].selected], s));
  }
  return total / c.samples.size();
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testutil

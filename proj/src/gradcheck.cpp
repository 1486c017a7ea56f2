#include "motlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "motlab/datagen.hpp"
#include "motlab/loss_grad.hpp"
#include "motlab/model.hpp"
#include "motlab/random.hpp"
#include "motlab/signal_space.hpp"

namespace motlab {

namespace {

void compare(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& numeric, const GradCheckOptions& opt,
             const std::string& label, GradCheckResult& out) {
  for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
    for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
      const double a = analytic(i, j), b = numeric(i, j);
      const double err = std::abs(a - b);
      ++out.entries;
      const double rel = err / std::max({std::abs(a), std::abs(b), opt.abs_floor});
      if (err > opt.abs_floor && rel > opt.rel_tol) ++out.failures;
      if (rel > out.max_rel_err) {
        out.max_rel_err = rel;
        out.worst = label;
      }
    }
  }
}

}  // namespace

GradCheckResult run_gradient_check(std::uint64_t seed, const GradCheckOptions& opt) {
  GradCheckResult out;
  Rng rng(seed);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int inst = 0; inst < opt.num_instances; ++inst) {
    // N = 2 keeps K = 8 * samples_per_type within the sample budget.
    const int num_classes = 2;
    const int dim = uniform_int(2 * num_classes, opt.max_dim);
    const int num_tokens = uniform_int(3, opt.max_tokens);
    const int num_experts = uniform_int(1, opt.max_experts);
    const int types = 4 * num_classes * (num_classes - 1);
    const int spt = uniform_int(1, std::max(1, opt.max_samples / types));

    const auto dict = build_dictionary(dim, num_classes, rng());
    const Corpus corpus = build_corpus(dict, num_tokens, 0.5, spt, rng());
    ModelState model = init_model(dim, num_experts, 1.0, rng);
    for (auto& e : model.experts) {
      e.w *= std::sqrt(static_cast<double>(dim));  // O(1) entries so every term matters
      e.w_kq *= std::sqrt(static_cast<double>(dim));
    }
    model.theta = Eigen::MatrixXd::NullaryExpr(dim, num_experts, [&] { return normal(rng); });

    Routes routes;
    for (const auto& s : corpus.samples) routes.push_back(route(model.theta, s, rng, 1.0));

    const GradientSet g = compute_gradients(model, corpus, routes);
    const std::string tag = "instance " + std::to_string(inst);

    const Eigen::MatrixXd num_theta = finite_diff_oracle(
        [&](const Eigen::MatrixXd& theta) {
          ModelState m = model;
          m.theta = theta;
          return router_loss(m, corpus, regate(theta, corpus, routes));
        },
        model.theta, opt.step);
    compare(g.d_theta, num_theta, opt, tag + " theta", out);

    for (int i = 0; i < num_experts; ++i) {
      const Eigen::MatrixXd num_w = finite_diff_oracle(
          [&](const Eigen::MatrixXd& w) {
            ModelState m = model;
            m.experts[i].w = w.col(0);
            return expert_loss(m, corpus, routes).expert_loss;
          },
          Eigen::MatrixXd(model.experts[i].w), opt.step);
      compare(Eigen::MatrixXd(g.d_w[i]), num_w, opt, tag + " w[" + std::to_string(i) + "]", out);

      const Eigen::MatrixXd num_wkq = finite_diff_oracle(
          [&](const Eigen::MatrixXd& wkq) {
            ModelState m = model;
            m.experts[i].w_kq = wkq;
            return expert_loss(m, corpus, routes).expert_loss;
          },
          model.experts[i].w_kq, opt.step);
      compare(g.d_wkq[i], num_wkq, opt, tag + " w_kq[" + std::to_string(i) + "]", out);
    }
    ++out.instances;
  }
  return out;
}

}  // namespace motlab

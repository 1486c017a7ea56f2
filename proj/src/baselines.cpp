#include "motlab/baselines.hpp"

#include <limits>
#include <random>
#include <stdexcept>

#include "attention_cache.hpp"
#include "motlab/loss_grad.hpp"
#include "motlab/metrics.hpp"

namespace motlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

MultiHeadParams init_multihead(int dim, int num_heads, double sigma0, Rng& rng) {
  if (num_heads < 1) throw std::invalid_argument("init_multihead: need at least one head");
  MultiHeadParams p;
  p.heads.reserve(num_heads);
  for (int h = 0; h < num_heads; ++h) p.heads.push_back(init_expert(dim, sigma0, rng));
  return p;
}

double multihead_forward(const MultiHeadParams& params, const Sample& sample) {
  double f = 0.0;
  for (const auto& head : params.heads) f += expert_forward(head, sample);
  return f;
}

MultiHeadResult train_multihead(MultiHeadParams params, const Corpus& corpus, const StageSchedule& schedule,
                                const MultiHeadObserver& observer) {
  schedule.validate();
  if (params.heads.empty() || params.heads.front().w.size() != corpus.dictionary.dim) {
    throw std::invalid_argument("train_multihead: parameter and corpus dimensions differ");
  }
  const int num_heads = static_cast<int>(params.heads.size());
  const int d = corpus.dictionary.dim;
  const double inv_k = 1.0 / static_cast<double>(corpus.size());
  detail::PooledTokenCache cache(corpus, num_heads);
  MultiHeadResult result;
  result.records.reserve(schedule.t_total);

  for (int t = 1; t <= schedule.t_total; ++t) {
    const Stage stage = schedule.stage_of(t);
    const bool train_heads = stage != Stage::kII;
    std::vector<Eigen::VectorXd> d_w;
    std::vector<Eigen::MatrixXd> d_wkq;
    if (train_heads) {
      d_w.assign(num_heads, Eigen::VectorXd::Zero(d));
    } else {
      d_wkq.assign(num_heads, Eigen::MatrixXd::Zero(d, d));
    }

    double total = 0.0;
    std::vector<ForwardTrace> traces(num_heads);
    for (int k = 0; k < corpus.size(); ++k) {
      const Sample& s = corpus.samples[k];
      double f = 0.0;
      for (int h = 0; h < num_heads; ++h) {
        if (train_heads) {
          f += cache.output(params.heads[h], h, k);
        } else {
          traces[h] = expert_trace(params.heads[h], s);
          f += traces[h].output;
        }
      }
      const double yf = s.label * f;
      total += logistic_loss(yf);
      const double coef = logistic_loss_grad(yf) * s.label * inv_k;
      for (int h = 0; h < num_heads; ++h) {
        if (train_heads) {
          d_w[h].noalias() += coef * cache.pooled(params.heads[h], h, k);
        } else {
          accumulate_expert_grad(s, traces[h], coef, nullptr, &d_wkq[h]);
        }
      }
    }

    TrainRecord rec;
    rec.epoch = t;
    rec.stage = stage;
    rec.expert_loss = total * inv_k;
    rec.router_loss = kNaN;
    rec.routed_counts.assign(num_heads, corpus.size());
    std::vector<Eigen::VectorXd> heads;
    for (const auto& h : params.heads) heads.push_back(h.w);
    const auto report = specialization_report(heads, corpus.dictionary);
    rec.expert_margins = report.margins;
    rec.mean_margin = report.mean_margin();
    rec.mean_pvv = detail::mean_signal_attention_cached(params.heads, report, corpus, cache);

    for (int h = 0; h < num_heads; ++h) {
      auto& head = params.heads[h];
      switch (stage) {
        case Stage::kI:
          normalized_step(head.w, d_w[h], schedule.eta);
          break;
        case Stage::kII:
          head.w_kq -= schedule.eta_a * d_wkq[h];
          cache.invalidate();
          break;
        case Stage::kIII:
          head.w -= schedule.eta * d_w[h];
          break;
      }
    }
    if (observer) observer(rec, params);
    result.records.push_back(std::move(rec));
  }
  result.final_params = std::move(params);
  return result;
}

MoeFfnParams init_moe_ffn(int dim, int num_experts, double sigma0, Rng& rng) {
  if (num_experts < 1) throw std::invalid_argument("init_moe_ffn: need at least one expert");
  std::normal_distribution<double> normal(0.0, sigma0 / std::sqrt(static_cast<double>(dim)));
  MoeFfnParams p;
  p.theta = Eigen::MatrixXd::Zero(dim, num_experts);
  for (int i = 0; i < num_experts; ++i) {
    Eigen::VectorXd w(dim);
    for (int j = 0; j < dim; ++j) w(j) = normal(rng);
    p.heads.push_back(std::move(w));
  }
  return p;
}

double moe_ffn_forward(const Eigen::VectorXd& head, const Sample& sample) {
  if (head.size() != sample.token_sum.size()) {
    throw std::invalid_argument("moe_ffn_forward: dimension mismatch");
  }
  return head.dot(sample.token_sum);
}

MoeFfnResult train_moe_ffn(MoeFfnParams params, const Corpus& corpus, const StageSchedule& schedule,
                           std::uint64_t seed) {
  schedule.validate();
  if (params.theta.rows() != corpus.dictionary.dim) {
    throw std::invalid_argument("train_moe_ffn: parameter and corpus dimensions differ");
  }
  const int num_experts = params.num_experts();
  const int d = corpus.dictionary.dim;
  const double inv_k = 1.0 / static_cast<double>(corpus.size());
  Rng noise_rng(seed);
  MoeFfnResult result;
  result.records.reserve(schedule.t_total);

  for (int t = 1; t <= schedule.t_total; ++t) {
    const Stage stage = schedule.stage_of(t);
    const Routes routes = route_corpus(params.theta, corpus, noise_rng, schedule.noise_scale(stage));

    TrainRecord rec;
    rec.epoch = t;
    rec.stage = stage;
    rec.routed_counts.assign(num_experts, 0);
    std::vector<Eigen::VectorXd> d_w(num_experts, Eigen::VectorXd::Zero(d));
    double expert_total = 0.0;
    double router_total = 0.0;
    for (std::size_t k = 0; k < routes.size(); ++k) {
      const auto& s = corpus.samples[k];
      const int m = routes[k].selected;
      const double yf = s.label * moe_ffn_forward(params.heads[m], s);
      expert_total += logistic_loss(yf);
      router_total += logistic_loss(yf * routes[k].gate_probs(m));
      ++rec.routed_counts[m];
      d_w[m].noalias() += (logistic_loss_grad(yf) * s.label * inv_k) * s.token_sum;
    }
    rec.expert_loss = expert_total * inv_k;
    rec.router_loss = router_total * inv_k;
    const auto report = specialization_report(params.heads, corpus.dictionary);
    rec.expert_margins = report.margins;
    rec.mean_margin = report.mean_margin();
    rec.mean_pvv = kNaN;

    for (int i = 0; i < num_experts; ++i) {
      if (stage == Stage::kI) {
        normalized_step(params.heads[i], d_w[i], schedule.eta);
      } else if (stage == Stage::kIII) {
        params.heads[i] -= schedule.eta * d_w[i];
      }
    }

    std::vector<double> outputs(routes.size());
    for (std::size_t k = 0; k < routes.size(); ++k) {
      outputs[k] = moe_ffn_forward(params.heads[routes[k].selected], corpus.samples[k]);
    }
    params.theta -= schedule.eta_r * router_gradient(corpus, routes, outputs, num_experts);
    result.records.push_back(std::move(rec));
  }
  result.final_params = std::move(params);
  return result;
}

}  // namespace motlab

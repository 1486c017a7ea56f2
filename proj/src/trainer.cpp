#include "motlab/trainer.hpp"

#include <limits>
#include <stdexcept>

#include "attention_cache.hpp"
#include "motlab/metrics.hpp"

namespace motlab {

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kI:
      return "I";
    case Stage::kII:
      return "II";
    case Stage::kIII:
      return "III";
  }
  return "?";
}

void StageSchedule::validate() const {
  if (!(0 < t1 && t1 < t2 && t2 < t_total)) {
    throw std::invalid_argument("schedule must satisfy 0 < t1 < t2 < t_total");
  }
  if (!(eta > 0.0 && eta_a > 0.0 && eta_r > 0.0)) {
    throw std::invalid_argument("learning rates must be positive");
  }
  for (double s : noise_scale_by_stage) {
    if (s < 0.0) throw std::invalid_argument("routing noise scales must be nonnegative");
  }
}

Stage StageSchedule::stage_of(int epoch) const {
  if (epoch <= t1) return Stage::kI;
  if (epoch <= t2) return Stage::kII;
  return Stage::kIII;
}

Routes route_corpus(const Eigen::MatrixXd& theta, const Corpus& corpus, Rng& rng, double noise_scale) {
  Routes routes;
  routes.reserve(corpus.samples.size());
  for (const auto& s : corpus.samples) routes.push_back(route(theta, s, rng, noise_scale));
  return routes;
}

void normalized_step(Eigen::VectorXd& w, const Eigen::VectorXd& grad, double eta) {
  const double norm = grad.norm();
  if (norm > 0.0) w -= (eta / norm) * grad;
}

TrainResult train(ModelState model, const Corpus& corpus, const StageSchedule& schedule, std::uint64_t seed,
                  const EpochObserver& observer) {
  schedule.validate();
  if (model.dim() != corpus.dictionary.dim) {
    throw std::invalid_argument("train: model and corpus dimensions differ");
  }
  const int num_experts = model.num_experts();
  const double inv_k = 1.0 / static_cast<double>(corpus.size());
  Rng noise_rng(seed);
  detail::PooledTokenCache cache(corpus, num_experts);
  TrainResult result;
  result.records.reserve(schedule.t_total);

  for (int t = 1; t <= schedule.t_total; ++t) {
    const Stage stage = schedule.stage_of(t);
    const Routes routes = route_corpus(model.theta, corpus, noise_rng, schedule.noise_scale(stage));

    // Forward sweep at the parameters entering this epoch.
    TrainRecord rec;
    rec.epoch = t;
    rec.stage = stage;
    rec.routed_counts.assign(num_experts, 0);
    std::vector<Eigen::VectorXd> d_w;
    std::vector<Eigen::MatrixXd> d_wkq;
    const bool train_heads = stage != Stage::kII;
    if (train_heads) {
      d_w.assign(num_experts, Eigen::VectorXd::Zero(model.dim()));
    } else {
      d_wkq.assign(num_experts, Eigen::MatrixXd::Zero(model.dim(), model.dim()));
    }
    double expert_total = 0.0;
    double router_total = 0.0;
    for (std::size_t k = 0; k < routes.size(); ++k) {
      const auto& s = corpus.samples[k];
      const int m = routes[k].selected;
      const int kk = static_cast<int>(k);
      if (train_heads) {
        const Eigen::VectorXd& z = cache.pooled(model.experts[m], m, kk);
        const double yf = s.label * model.experts[m].w.dot(z);
        expert_total += logistic_loss(yf);
        router_total += logistic_loss(yf * routes[k].gate_probs(m));
        d_w[m].noalias() += (logistic_loss_grad(yf) * s.label * inv_k) * z;
      } else {
        const ForwardTrace trace = expert_trace(model.experts[m], s);
        const double yf = s.label * trace.output;
        expert_total += logistic_loss(yf);
        router_total += logistic_loss(yf * routes[k].gate_probs(m));
        accumulate_expert_grad(s, trace, logistic_loss_grad(yf) * s.label * inv_k, nullptr, &d_wkq[m]);
      }
      ++rec.routed_counts[m];
    }
    rec.expert_loss = expert_total * inv_k;
    rec.router_loss = router_total * inv_k;
    const auto report = specialization_report(model, corpus.dictionary);
    rec.expert_margins = report.margins;
    rec.mean_margin = report.mean_margin();
    rec.mean_pvv = detail::mean_signal_attention_cached(model.experts, report, corpus, cache);

    // Expert updates for the active stage.
    for (int i = 0; i < num_experts; ++i) {
      auto& e = model.experts[i];
      switch (stage) {
        case Stage::kI:
          normalized_step(e.w, d_w[i], schedule.eta);
          break;
        case Stage::kII:
          e.w_kq -= schedule.eta_a * d_wkq[i];
          cache.invalidate();
          break;
        case Stage::kIII:
          e.w -= schedule.eta * d_w[i];
          break;
      }
    }

    // Router update with the same routing, after the expert step.
    std::vector<double> outputs(routes.size());
    for (std::size_t k = 0; k < routes.size(); ++k) {
      const int m = routes[k].selected;
      outputs[k] = cache.output(model.experts[m], m, static_cast<int>(k));
    }
    model.theta -= schedule.eta_r * router_gradient(corpus, routes, outputs, num_experts);
    model.epoch = t;

    if (t == schedule.t1) result.checkpoints[0] = model;
    if (t == schedule.t2) result.checkpoints[1] = model;
    if (t == schedule.t_total) result.checkpoints[2] = model;
    if (observer) observer(rec, model);
    result.records.push_back(std::move(rec));
  }
  result.final_model = std::move(model);
  return result;
}

}  // namespace motlab

#include "motlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "motlab/random.hpp"

namespace motlab {

double SpecializationReport::mean_margin() const {
  if (margins.empty()) return 0.0;
  return std::accumulate(margins.begin(), margins.end(), 0.0) / static_cast<double>(margins.size());
}

std::vector<Eigen::VectorXd> expert_heads(const ModelState& model) {
  std::vector<Eigen::VectorXd> heads;
  heads.reserve(model.experts.size());
  for (const auto& e : model.experts) heads.push_back(e.w);
  return heads;
}

SpecializationReport specialization_report(const std::vector<Eigen::VectorXd>& heads,
                                           const SignalDictionary& dict) {
  const int n_cls = dict.num_classes;
  SpecializationReport rep;
  rep.sets.resize(n_cls);
  for (std::size_t i = 0; i < heads.size(); ++i) {
    const Eigen::VectorXd proj = dict.cls_signals.transpose() * heads[i];
    Eigen::Index best = 0;
    proj.maxCoeff(&best);
    double runner_up = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < n_cls; ++n) {
      if (n != best) runner_up = std::max(runner_up, proj(n));
    }
    rep.best_class.push_back(static_cast<int>(best));
    rep.margins.push_back(n_cls > 1 ? proj(best) - runner_up : 0.0);
    rep.sets[best].push_back(static_cast<int>(i));
  }
  rep.covers_all_classes =
      std::all_of(rep.sets.begin(), rep.sets.end(), [](const auto& s) { return !s.empty(); });
  return rep;
}

SpecializationReport specialization_report(const ModelState& model, const SignalDictionary& dict) {
  return specialization_report(expert_heads(model), dict);
}

Eigen::MatrixXd routing_histogram(const Eigen::MatrixXd& theta, const Corpus& corpus, int num_trials,
                                  double noise_scale, std::uint64_t seed) {
  if (num_trials < 1) throw std::invalid_argument("routing_histogram: num_trials must be positive");
  Rng rng(seed);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(corpus.num_classes(), theta.cols());
  for (const auto& s : corpus.samples) {
    for (int t = 0; t < num_trials; ++t) {
      counts(s.class_index, route(theta, s, rng, noise_scale).selected) += 1.0;
    }
  }
  for (Eigen::Index n = 0; n < counts.rows(); ++n) {
    const double total = counts.row(n).sum();
    if (total > 0.0) counts.row(n) /= total;
  }
  return counts;
}

double RoutingConcentration::min_mass() const {
  return mass_on_set.empty() ? 0.0 : *std::min_element(mass_on_set.begin(), mass_on_set.end());
}

double RoutingConcentration::max_spread() const {
  return spread_ratio.empty() ? 0.0 : *std::max_element(spread_ratio.begin(), spread_ratio.end());
}

RoutingConcentration routing_concentration(const Eigen::MatrixXd& histogram,
                                           const SpecializationReport& report) {
  RoutingConcentration rc;
  for (Eigen::Index n = 0; n < histogram.rows(); ++n) {
    const auto& set = report.sets[n];
    if (set.empty()) {
      rc.mass_on_set.push_back(0.0);
      rc.spread_ratio.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    double mass = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int i : set) {
      const double f = histogram(n, i);
      mass += f;
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    rc.mass_on_set.push_back(mass);
    rc.spread_ratio.push_back(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
  }
  return rc;
}

std::vector<AttentionProbeRow> attention_probe(const ModelState& model, const SignalDictionary& dict,
                                               const Corpus& probe_corpus) {
  const auto report = specialization_report(model, dict);
  std::vector<AttentionProbeRow> rows;
  for (int i = 0; i < model.num_experts(); ++i) {
    const auto& expert = model.experts[i];
    AttentionProbeRow row;
    row.expert = i;
    row.class_index = report.best_class[i];
    for (const auto& s : probe_corpus.samples) {
      if (s.class_index != row.class_index) continue;
      const Eigen::VectorXd signal = s.tokens.col(s.pos_signal);
      const Eigen::VectorXd from_signal = softmax(s.tokens.transpose() * (expert.w_kq * signal));
      const Eigen::VectorXd from_class =
          softmax(s.tokens.transpose() * (expert.w_kq * s.tokens.col(s.pos_class)));
      row.p_vv += from_signal(s.pos_signal);
      row.p_vc += from_signal(s.pos_class);
      row.p_cv += from_class(s.pos_signal);
      double noise_mass = 0.0;
      int noise_slots = 0;
      for (int l = 0; l < s.num_tokens(); ++l) {
        if (s.is_noise_position(l)) {
          noise_mass += from_signal(l);
          ++noise_slots;
        }
      }
      if (noise_slots > 0) row.p_vxi += noise_mass / noise_slots;
      ++row.num_samples;
    }
    if (row.num_samples > 0) {
      const double inv = 1.0 / row.num_samples;
      row.p_vv *= inv;
      row.p_vc *= inv;
      row.p_cv *= inv;
      row.p_vxi *= inv;
    }
    rows.push_back(row);
  }
  return rows;
}

double self_attention_on_signal(const ExpertParams& expert, const Sample& sample) {
  return attention_score(expert, sample, sample.tokens.col(sample.pos_signal), sample.pos_signal);
}

std::optional<double> mean_signal_attention(const std::vector<ExpertParams>& experts,
                                            const SpecializationReport& report, const Corpus& corpus) {
  double total = 0.0;
  long count = 0;
  for (const auto& s : corpus.samples) {
    for (int i : report.sets[s.class_index]) {
      total += self_attention_on_signal(experts[i], s);
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return total / static_cast<double>(count);
}

Eigen::MatrixXd signal_projection_probe(const std::vector<Eigen::VectorXd>& heads,
                                        const SignalDictionary& dict) {
  const Eigen::MatrixXd all = dict.all_signals();
  Eigen::MatrixXd table(static_cast<Eigen::Index>(heads.size()), all.cols());
  for (std::size_t i = 0; i < heads.size(); ++i) {
    table.row(static_cast<Eigen::Index>(i)) = (all.transpose() * heads[i]).transpose();
  }
  return table;
}

RateFit fit_log_linear(const std::vector<int>& epochs, const std::vector<double>& losses) {
  if (epochs.size() != losses.size() || epochs.size() < 2) {
    throw std::invalid_argument("fit_log_linear: need at least two (epoch, loss) pairs");
  }
  const auto n = static_cast<double>(epochs.size());
  double mx = 0.0;
  double my = 0.0;
  std::vector<double> logs(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!(losses[i] > 0.0)) {
      throw std::invalid_argument("fit_log_linear: nonpositive loss at epoch " + std::to_string(epochs[i]));
    }
    logs[i] = std::log(losses[i]);
    mx += epochs[i];
    my += logs[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const double dx = epochs[i] - mx;
    const double dy = logs[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_log_linear: epochs must not all coincide");
  RateFit fit;
  fit.first_epoch = *std::min_element(epochs.begin(), epochs.end());
  fit.last_epoch = *std::max_element(epochs.begin(), epochs.end());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace motlab

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "motlab/datagen.hpp"
#include "motlab/model.hpp"
#include "motlab/signal_space.hpp"

namespace motlab {

/// Which classification signal each expert head aligns with best.
struct SpecializationReport {
  std::vector<int> best_class;         // n*_i
  std::vector<double> margins;         // <W, v_n*> - max_{n != n*} <W, v_n>
  std::vector<std::vector<int>> sets;  // M_n, experts in increasing order
  bool covers_all_classes = false;

  double mean_margin() const;
};

SpecializationReport specialization_report(const std::vector<Eigen::VectorXd>& heads,
                                           const SignalDictionary& dict);
SpecializationReport specialization_report(const ModelState& model, const SignalDictionary& dict);

std::vector<Eigen::VectorXd> expert_heads(const ModelState& model);

/// N x M matrix; row n holds how often class-n samples were routed to each
/// expert, normalized to sum to one.
Eigen::MatrixXd routing_histogram(const Eigen::MatrixXd& theta, const Corpus& corpus, int num_trials,
                                  double noise_scale, std::uint64_t seed);

struct RoutingConcentration {
  /// Per class: routing mass on M_n, and max/min frequency within M_n.
  std::vector<double> mass_on_set;
  std::vector<double> spread_ratio;
  double min_mass() const;
  double max_spread() const;
};

/// Empty specialization sets give zero mass and an infinite spread.
RoutingConcentration routing_concentration(const Eigen::MatrixXd& histogram,
                                           const SpecializationReport& report);

/// Mean attention scores of one expert over held-out samples of its class.
/// Signal tokens are probed as they appear in the sample, so "v_n" stands for y v_n.
struct AttentionProbeRow {
  int expert = 0;
  int class_index = 0;
  int num_samples = 0;
  double p_vv = 0.0;   // query v_n, position of v_n
  double p_vc = 0.0;   // query v_n, position of c_n
  double p_cv = 0.0;   // query c_n, position of v_n
  double p_vxi = 0.0;  // query v_n, mean over noise positions
};

std::vector<AttentionProbeRow> attention_probe(const ModelState& model, const SignalDictionary& dict,
                                               const Corpus& probe_corpus);

/// Attention of `expert` from the signal token onto itself in `sample`.
double self_attention_on_signal(const ExpertParams& expert, const Sample& sample);

/// Mean of self_attention_on_signal over (sample, expert) pairs where the
/// expert specializes in the sample's class; empty when no pair exists.
std::optional<double> mean_signal_attention(const std::vector<ExpertParams>& experts,
                                            const SpecializationReport& report, const Corpus& corpus);

/// M x 2N table of <W^(i), mu>, columns ordered c_1..c_N, v_1..v_N.
Eigen::MatrixXd signal_projection_probe(const std::vector<Eigen::VectorXd>& heads,
                                        const SignalDictionary& dict);

struct RateFit {
  int first_epoch = 0;
  int last_epoch = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line through (epoch, log loss). Throws on a nonpositive loss
/// or fewer than two points.
RateFit fit_log_linear(const std::vector<int>& epochs, const std::vector<double>& losses);

}  // namespace motlab

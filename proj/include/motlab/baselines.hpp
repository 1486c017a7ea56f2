#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "motlab/datagen.hpp"
#include "motlab/model.hpp"
#include "motlab/trainer.hpp"

namespace motlab {

/// Multi-head transformer without gating: every head sees every sample and
/// the output is the sum of per-head outputs.
struct MultiHeadParams {
  std::vector<ExpertParams> heads;
};

MultiHeadParams init_multihead(int dim, int num_heads, double sigma0, Rng& rng);

double multihead_forward(const MultiHeadParams& params, const Sample& sample);

struct MultiHeadResult {
  std::vector<TrainRecord> records;
  MultiHeadParams final_params;
};

using MultiHeadObserver = std::function<void(const TrainRecord&, const MultiHeadParams&)>;

/// Same three-stage schedule as the MoT trainer, applied to all heads on the
/// full corpus. Router-related record fields are NaN; routed_counts holds K
/// for every head.
MultiHeadResult train_multihead(MultiHeadParams params, const Corpus& corpus, const StageSchedule& schedule,
                                const MultiHeadObserver& observer = {});

/// Attention-absent MoE: gated linear heads on the token sum.
struct MoeFfnParams {
  Eigen::MatrixXd theta;               // d x M
  std::vector<Eigen::VectorXd> heads;  // M x (d)

  int num_experts() const { return static_cast<int>(heads.size()); }
};

MoeFfnParams init_moe_ffn(int dim, int num_experts, double sigma0, Rng& rng);

/// f = W^T sum_l X_l.
double moe_ffn_forward(const Eigen::VectorXd& head, const Sample& sample);

struct MoeFfnResult {
  std::vector<TrainRecord> records;
  MoeFfnParams final_params;
};

/// Stage I normalized GD on the heads, nothing to train in Stage II, plain
/// GD in Stage III; the router trains every epoch. mean_pvv is NaN.
MoeFfnResult train_moe_ffn(MoeFfnParams params, const Corpus& corpus, const StageSchedule& schedule,
                           std::uint64_t seed);

}  // namespace motlab

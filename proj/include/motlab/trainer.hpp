#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "motlab/datagen.hpp"
#include "motlab/loss_grad.hpp"
#include "motlab/model.hpp"

namespace motlab {

enum class Stage { kI = 1, kII = 2, kIII = 3 };

const char* stage_name(Stage stage);

/// Epochs 1..t1 train heads with normalized GD, t1+1..t2 train attention,
/// t2+1..t_total fine-tune heads with plain GD. The router trains every epoch.
struct StageSchedule {
  int t1 = 300;
  int t2 = 800;
  int t_total = 1200;
  double eta = 0.05;
  double eta_a = 0.5;
  double eta_r = 0.5;
  std::array<double, 3> noise_scale_by_stage{1.0, 1.0, 0.0};

  /// Throws std::invalid_argument unless 0 < t1 < t2 < t_total and rates are positive.
  void validate() const;
  Stage stage_of(int epoch) const;
  double noise_scale(Stage stage) const { return noise_scale_by_stage[static_cast<int>(stage) - 1]; }
};

/// One row of the experiment log. Row t describes the model as it enters
/// epoch t: losses use that epoch's routing, before any parameter update.
/// Fields that do not apply to an architecture hold NaN.
struct TrainRecord {
  int epoch = 0;
  Stage stage = Stage::kI;
  double expert_loss = 0.0;
  double router_loss = 0.0;
  std::vector<int> routed_counts;
  std::vector<double> expert_margins;
  double mean_margin = 0.0;
  double mean_pvv = 0.0;
};

struct TrainResult {
  std::vector<TrainRecord> records;
  ModelState final_model;
  /// Snapshots taken after the updates of epochs t1, t2 and t_total.
  std::array<ModelState, 3> checkpoints;
};

/// Called after every epoch with that epoch's record and the updated model.
using EpochObserver = std::function<void(const TrainRecord&, const ModelState&)>;

/// Full-batch three-stage training of the mixture of transformers.
/// `seed` drives the routing noise only.
TrainResult train(ModelState model, const Corpus& corpus, const StageSchedule& schedule, std::uint64_t seed,
                  const EpochObserver& observer = {});

/// Routes every sample once with i.i.d. uniform noise of the given scale.
Routes route_corpus(const Eigen::MatrixXd& theta, const Corpus& corpus, Rng& rng, double noise_scale);

/// W <- W - eta g / ||g||, skipped when g is exactly zero.
void normalized_step(Eigen::VectorXd& w, const Eigen::VectorXd& grad, double eta);

}  // namespace motlab

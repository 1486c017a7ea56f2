#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "motlab/datagen.hpp"
#include "motlab/metrics.hpp"
#include "motlab/model.hpp"
#include "motlab/trainer.hpp"

namespace motlab {

/// Everything a run needs. Field names double as config-file keys.
struct ExperimentConfig {
  // data
  int num_classes = 4;       // N
  int dim = 64;              // d
  int num_tokens = 10;       // L
  double noise_std = 0.05;   // sigma_xi
  int samples_per_type = 4;  // K = 4 N (N - 1) samples_per_type
  // models
  int num_experts = 12;  // M
  double sigma0 = 0.1;
  int num_heads = 0;  // multi-head baseline H; 0 means H = M
  // schedule
  int t1 = 300;
  int t2 = 800;
  int t_total = 1200;
  double eta = 0.05;
  double eta_a = 0.5;
  double eta_r = 0.5;
  double noise_scale_stage1 = 1.0;
  double noise_scale_stage2 = 1.0;
  double noise_scale_stage3 = 0.0;
  // evaluation
  int histogram_trials = 20;
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir;

  StageSchedule schedule() const;
  int heads() const { return num_heads > 0 ? num_heads : num_experts; }
  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Invalid configuration; `key` names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Parses `key = value` lines (# starts a comment) over `base`. Unknown keys,
/// duplicates and malformed values raise ConfigError.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
/// Canonical text form; parse_config(format_config(c)) == c.
std::string format_config(const ExperimentConfig& config);

/// The golden configuration used by the regression and acceptance tests.
ExperimentConfig golden_config();

/// Per-seed inputs shared by every architecture.
struct SeedData {
  Corpus corpus;
  Corpus probe;
  std::string corpus_checksum;
};
SeedData make_seed_data(const ExperimentConfig& config, std::uint64_t seed);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string corpus_checksum;

  std::vector<TrainRecord> mot;
  std::vector<TrainRecord> multihead;
  std::vector<TrainRecord> moe_ffn;
  std::array<ModelState, 3> mot_checkpoints;
  ModelState mot_initial;

  double margin_epoch0 = 0.0;
  SpecializationReport report_t1;
  Eigen::MatrixXd histogram_t1;  // N x M
  RoutingConcentration concentration_t1;
  std::vector<AttentionProbeRow> probe_t2;
  Eigen::MatrixXd projections_final;  // M x 2N
  double projection_ratio = 0.0;      // min over active experts
  RateFit mot_fit;
  RateFit multihead_fit;
  double max_theta_sum = 0.0;  // max over epochs of ||sum_i theta_i||_inf
  double moe_best_last_quarter = 0.0;

  double mot_final() const { return mot.back().expert_loss; }
  double multihead_final() const { return multihead.back().expert_loss; }
  double moe_final() const { return moe_ffn.back().expert_loss; }
};

/// Named per-seed pass/fail flags, using the acceptance thresholds.
struct PropertyCheck {
  std::string name;
  bool passed = false;
};
std::vector<PropertyCheck> property_checks(const SeedOutcome& outcome, const ExperimentConfig& config);

struct ComparisonBundle {
  std::vector<SeedOutcome> seeds;
  std::vector<std::filesystem::path> files;  // everything written, relative to out_dir
};

/// Trains MoT, the multi-head baseline and the attention-absent MoE on one
/// shared corpus per seed and evaluates them. Writes per-seed CSVs, JSON
/// artifacts and SVG plots under config.out_dir (when nonempty), then a
/// summary and a manifest. A failing seed is recorded and skipped.
ComparisonBundle run_comparison(const ExperimentConfig& config);

/// Called after each architecture finishes ("mot", "multihead", "moe-ffn").
using SeedProgress = std::function<void(const std::string& arch, const SeedOutcome& partial)>;

/// One seed's full pipeline without touching the file system. Throws on failure.
SeedOutcome evaluate_seed(const ExperimentConfig& config, std::uint64_t seed,
                          const SeedProgress& progress = {});

struct AblationPoint {
  int t1 = 0;
  int t2 = 0;
  int t_total = 0;
  double final_loss = 0.0;
  bool covers_all_classes = false;
  double min_mass = 0.0;
};

/// Retrains MoT for every (t1, t2) pair on the first seed's corpus. The
/// Stage-III length t_total - t2 of the config is kept fixed. Throws
/// std::invalid_argument on an empty grid or an invalid pair.
std::vector<AblationPoint> run_ablation_schedule(const ExperimentConfig& config,
                                                 const std::vector<int>& t1_grid,
                                                 const std::vector<int>& t2_grid);

/// SVG loss curves (log scale) and margin curves with stage boundaries;
/// empty record vectors are skipped.
std::string render_loss_plot(const std::vector<TrainRecord>& mot, const std::vector<TrainRecord>& multihead,
                             const std::vector<TrainRecord>& moe_ffn, const StageSchedule& schedule);
std::string render_margin_plot(const std::vector<TrainRecord>& mot, const std::vector<TrainRecord>& multihead,
                               const std::vector<TrainRecord>& moe_ffn, const StageSchedule& schedule);

/// Writes `files` as "path<TAB>sha256" lines, sorted by path.
void write_manifest(const std::filesystem::path& root, const std::vector<std::filesystem::path>& files);

}  // namespace motlab

#include <doctest.h>

#include "motlab/io.hpp"
#include "motlab/trainer.hpp"
#include "test_util.hpp"

using namespace motlab;

namespace {

StageSchedule short_schedule() {
  StageSchedule s;
  s.t1 = 6;
  s.t2 = 12;
  s.t_total = 18;
  s.eta = 0.05;
  s.eta_a = 0.5;
  s.eta_r = 0.5;
  return s;
}

std::string expert_sum(const ModelState& m, bool heads) {
  std::string key;
  for (const auto& e : m.experts) {
    const Eigen::MatrixXd x = heads ? Eigen::MatrixXd(e.w) : e.w_kq;
    key +=
        io::sha256_hex(std::string_view(reinterpret_cast<const char*>(x.data()), sizeof(double) * x.size()));
  }
  return key;
}

}  // namespace

TEST_CASE("schedule validation and stage lookup") {
  StageSchedule s = short_schedule();
  CHECK_NOTHROW(s.validate());
  CHECK(s.stage_of(1) == Stage::kI);
  CHECK(s.stage_of(6) == Stage::kI);
  CHECK(s.stage_of(7) == Stage::kII);
  CHECK(s.stage_of(12) == Stage::kII);
  CHECK(s.stage_of(13) == Stage::kIII);
  s.t2 = s.t1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = short_schedule();
  s.eta = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = short_schedule();
  s.t_total = s.t2;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("single expert: every Stage-I step has length eta") {
  const Corpus c = testutil::small_corpus(8, 2, 4, 0.2, 2);
  Rng rng(1);
  const ModelState init = init_model(8, 1, 0.1, rng);
  Eigen::VectorXd prev = init.experts[0].w;
  const StageSchedule s = short_schedule();
  train(init, c, s, 3, [&](const TrainRecord& rec, const ModelState& m) {
    if (rec.stage == Stage::kI) CHECK(std::abs((m.experts[0].w - prev).norm() - s.eta) <= 1e-10);
    prev = m.experts[0].w;
  });
}

TEST_CASE("freezing discipline, router continuity and conservation") {
  const Corpus c = testutil::small_corpus(8, 2, 4, 0.2, 2);
  Rng rng(2);
  const ModelState init = init_model(8, 4, 0.1, rng);
  const StageSchedule s = short_schedule();
  ModelState prev = init;
  int rows = 0;
  const TrainResult r = train(init, c, s, 5, [&](const TrainRecord& rec, const ModelState& m) {
    ++rows;
    CHECK(rec.epoch == rows);
    CHECK(rec.stage == s.stage_of(rec.epoch));
    CHECK(m.theta.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(m.theta != prev.theta);
    if (rec.stage == Stage::kII) {
      CHECK(expert_sum(m, true) == expert_sum(prev, true));
    } else {
      CHECK(expert_sum(m, false) == expert_sum(prev, false));
    }
    // Experts nobody was routed to keep their head in Stage I.
    for (int i = 0; i < 4; ++i) {
      if (rec.stage == Stage::kI && rec.routed_counts[i] == 0) {
        CHECK(m.experts[i].w == prev.experts[i].w);
      }
    }
    prev = m;
  });
  CHECK(rows == s.t_total);
  CHECK(r.records.size() == static_cast<std::size_t>(s.t_total));
  CHECK(r.checkpoints[2].theta == r.final_model.theta);
  for (const auto& rec : r.records) {
    int total = 0;
    for (int n : rec.routed_counts) total += n;
    CHECK(total == c.size());
  }
}

TEST_CASE("checkpoints are taken after the boundary epochs") {
  const Corpus c = testutil::small_corpus(8, 2, 4, 0.2, 1);
  Rng rng(3);
  const ModelState init = init_model(8, 3, 0.1, rng);
  const StageSchedule s = short_schedule();
  std::vector<ModelState> seen;
  const TrainResult r =
      train(init, c, s, 9, [&](const TrainRecord&, const ModelState& m) { seen.push_back(m); });
  CHECK(r.checkpoints[0].theta == seen[s.t1 - 1].theta);
  CHECK(r.checkpoints[1].experts[0].w_kq == seen[s.t2 - 1].experts[0].w_kq);
  CHECK(r.checkpoints[2].experts[1].w == seen.back().experts[1].w);
}

TEST_CASE("training is bitwise deterministic") {
  const Corpus c = testutil::small_corpus(8, 2, 4, 0.2, 1);
  Rng rng(4);
  const ModelState init = init_model(8, 3, 0.1, rng);
  const TrainResult a = train(init, c, short_schedule(), 11);
  const TrainResult b = train(init, c, short_schedule(), 11);
  CHECK(io::trajectory_csv(a.records) == io::trajectory_csv(b.records));
  CHECK(io::model_checksum(a.final_model) == io::model_checksum(b.final_model));
}

TEST_CASE("records describe the model entering each epoch") {
  const Corpus c = testutil::small_corpus(8, 2, 4, 0.2, 1);
  Rng rng(5);
  const ModelState init = init_model(8, 2, 0.1, rng);
  StageSchedule s = short_schedule();
  s.noise_scale_by_stage = {0.0, 0.0, 0.0};  // deterministic routes
  const TrainResult r = train(init, c, s, 1);
  Rng none(0);
  const Routes routes = route_corpus(init.theta, c, none, 0.0);
  CHECK(r.records[0].expert_loss == doctest::Approx(expert_loss(init, c, routes).expert_loss).epsilon(1e-13));
}

TEST_CASE("invalid schedule and mismatched corpus are rejected") {
  const Corpus c = testutil::small_corpus();
  Rng rng(6);
  StageSchedule s = short_schedule();
  s.t1 = 0;
  CHECK_THROWS_AS(train(init_model(8, 2, 0.1, rng), c, s, 0), std::invalid_argument);
  CHECK_THROWS_AS(train(init_model(5, 2, 0.1, rng), c, short_schedule(), 0), std::invalid_argument);
}

TEST_CASE("normalized step") {
  Eigen::VectorXd w = Eigen::Vector3d(1, 2, 3);
  normalized_step(w, Eigen::Vector3d(0, 3, 4), 0.5);
  CHECK(testutil::max_abs(w - Eigen::Vector3d(1, 1.7, 2.6)) <= 1e-15);
  const Eigen::VectorXd before = w;
  normalized_step(w, Eigen::Vector3d::Zero(), 0.5);
  CHECK(w == before);
}

#include <doctest.h>

#include "motlab/baselines.hpp"
#include "motlab/io.hpp"
#include "motlab/trainer.hpp"
#include "test_util.hpp"

using namespace motlab;

namespace {

StageSchedule short_schedule() {
  StageSchedule s;
  s.t1 = 5;
  s.t2 = 10;
  s.t_total = 30;
  return s;
}

}  // namespace

TEST_CASE("multi-head forward is the sum of per-head expert outputs") {
  const Corpus c = testutil::small_corpus();
  Rng rng(1);
  SUBCASE("one head") {
    const MultiHeadParams p = init_multihead(8, 1, 2.0, rng);
    for (const auto& s : c.samples) CHECK(multihead_forward(p, s) == expert_forward(p.heads[0], s));
  }
  SUBCASE("zero heads output zero") {
    MultiHeadParams p = init_multihead(8, 3, 2.0, rng);
    for (auto& h : p.heads) h.w.setZero();
    for (const auto& s : c.samples) CHECK(multihead_forward(p, s) == 0.0);
  }
  SUBCASE("property: compositionality on random heads") {
    for (int t = 0; t < 100; ++t) {
      const MultiHeadParams p = init_multihead(8, 1 + t % 5, 2.0, rng);
      for (const auto& s : c.samples) {
        double sum = 0.0;
        for (const auto& h : p.heads) sum += expert_forward(h, s);
        CHECK(std::abs(multihead_forward(p, s) - sum) <= 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(init_multihead(8, 0, 0.1, rng), std::invalid_argument);
}

TEST_CASE("MoE-FFN forward equals MoT forward with zero key-query") {
  const Corpus c = testutil::small_corpus();
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const ExpertParams e{init_expert(8, 2.0, rng).w, Eigen::MatrixXd::Zero(8, 8)};
    for (const auto& s : c.samples) {
      CHECK(std::abs(moe_ffn_forward(e.w, s) - expert_forward(e, s)) <= 1e-12);
    }
  }
  CHECK(moe_ffn_forward(Eigen::VectorXd::Zero(8), c.samples[0]) == 0.0);
  CHECK_THROWS_AS(moe_ffn_forward(Eigen::VectorXd::Zero(3), c.samples[0]), std::invalid_argument);
}

TEST_CASE("multi-head training") {
  const Corpus c = testutil::small_corpus(16, 2, 5, 0.1, 2);
  Rng rng(3);
  const MultiHeadParams init = init_multihead(16, 3, 0.1, rng);
  const MultiHeadResult r = train_multihead(init, c, short_schedule());
  REQUIRE(r.records.size() == 30);
  CHECK(r.records[0].expert_loss == doctest::Approx(std::log(2.0)).epsilon(0.05));
  for (const auto& rec : r.records) {
    CHECK(std::isnan(rec.router_loss));
    CHECK(rec.routed_counts == std::vector<int>(3, c.size()));
  }
  // Small-step plain GD in Stage III does not increase the loss.
  for (std::size_t t = 11; t < r.records.size(); ++t) {
    CHECK(r.records[t].expert_loss <= r.records[t - 1].expert_loss + 1e-15);
  }
  // Stage II leaves the heads alone.
  MultiHeadParams prev = init;
  train_multihead(init, c, short_schedule(), [&](const TrainRecord& rec, const MultiHeadParams& p) {
    if (rec.stage == Stage::kII) {
      for (std::size_t h = 0; h < p.heads.size(); ++h) CHECK(p.heads[h].w == prev.heads[h].w);
    } else {
      for (std::size_t h = 0; h < p.heads.size(); ++h) CHECK(p.heads[h].w_kq == prev.heads[h].w_kq);
    }
    prev = p;
  });
}

TEST_CASE("MoE-FFN training") {
  const Corpus c = testutil::small_corpus(16, 2, 5, 0.1, 2);
  Rng rng(4);
  MoeFfnParams zero = init_moe_ffn(16, 3, 0.1, rng);
  for (auto& h : zero.heads) h.setZero();
  StageSchedule one = short_schedule();
  const MoeFfnResult z = train_moe_ffn(zero, c, one, 1);
  CHECK(z.records[0].expert_loss == std::log(2.0));
  for (const auto& rec : z.records) CHECK(std::isnan(rec.mean_pvv));

  const MoeFfnParams init = init_moe_ffn(16, 3, 0.1, rng);
  CHECK(init.theta.isZero(0.0));
  const MoeFfnResult a = train_moe_ffn(init, c, one, 7);
  const MoeFfnResult b = train_moe_ffn(init, c, one, 7);
  CHECK(io::trajectory_csv(a.records) == io::trajectory_csv(b.records));
  CHECK(a.final_params.theta.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-8);
  CHECK_THROWS_AS(init_moe_ffn(16, 0, 0.1, rng), std::invalid_argument);
}

TEST_CASE("single-expert MoT matches a one-head multi-head run from the same draws") {
  const Corpus c = testutil::small_corpus(16, 2, 5, 0.1, 2);
  Rng rng(5);
  const ModelState mot = init_model(16, 1, 0.1, rng);
  const MultiHeadParams mh{mot.experts};
  const StageSchedule s = short_schedule();
  const TrainResult a = train(mot, c, s, 3);
  const MultiHeadResult b = train_multihead(mh, c, s);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    CHECK(a.records[t].expert_loss == doctest::Approx(b.records[t].expert_loss).epsilon(1e-12));
  }
  CHECK(testutil::max_abs(a.final_model.experts[0].w - b.final_params.heads[0].w) <= 1e-12);
  CHECK(testutil::max_abs(a.final_model.experts[0].w_kq - b.final_params.heads[0].w_kq) <= 1e-12);
}

#include <doctest.h>

#include "motlab/metrics.hpp"
#include "test_util.hpp"

using namespace motlab;

TEST_CASE("specialization report") {
  const auto dict = canonical_basis_dictionary(4);
  SUBCASE("exact alignment") {
    const auto r = specialization_report(std::vector<Eigen::VectorXd>{dict.cls_signal(2)}, dict);
    CHECK(r.best_class[0] == 2);
    CHECK(r.margins[0] == 1.0);
  }
  SUBCASE("zero head ties to the first class") {
    const auto r = specialization_report(std::vector<Eigen::VectorXd>{Eigen::VectorXd::Zero(8)}, dict);
    CHECK(r.best_class[0] == 0);
    CHECK(r.margins[0] == 0.0);
    CHECK_FALSE(r.covers_all_classes);
    CHECK(r.sets[0] == std::vector<int>{0});
  }
  SUBCASE("property: matches brute force and partitions the experts") {
    const auto d = build_dictionary(16, 4, 2);
    Rng rng(1);
    std::normal_distribution<double> normal;
    for (int t = 0; t < 50; ++t) {
      std::vector<Eigen::VectorXd> heads;
      for (int i = 0; i < 7; ++i)
        heads.push_back(Eigen::VectorXd::NullaryExpr(16, [&] { return normal(rng); }));
      const auto r = specialization_report(heads, d);
      std::size_t total = 0;
      for (const auto& set : r.sets) total += set.size();
      CHECK(total == heads.size());
      bool covers = true;
      for (const auto& set : r.sets) covers = covers && !set.empty();
      CHECK(r.covers_all_classes == covers);
      for (int i = 0; i < 7; ++i) {
        int best = 0;
        for (int n = 1; n < 4; ++n)
          if (heads[i].dot(d.cls_signal(n)) > heads[i].dot(d.cls_signal(best))) best = n;
        double second = -INFINITY;
        for (int n = 0; n < 4; ++n)
          if (n != best) second = std::max(second, heads[i].dot(d.cls_signal(n)));
        CHECK(r.best_class[i] == best);
        CHECK(std::abs(r.margins[i] - (heads[i].dot(d.cls_signal(best)) - second)) <= 1e-12);
        // Positive rescaling leaves the assignment unchanged.
        std::vector<Eigen::VectorXd> scaled = heads;
        for (auto& h : scaled) h *= 3.7;
        CHECK(specialization_report(scaled, d).best_class == r.best_class);
      }
    }
  }
}

TEST_CASE("routing histogram") {
  const Corpus c = testutil::small_corpus(8, 2, 4, 0.2, 4);
  const int M = 5;
  const Eigen::MatrixXd h = routing_histogram(Eigen::MatrixXd::Zero(8, M), c, 500, 1.0, 3);
  CHECK(h.rows() == 2);
  CHECK(h.cols() == M);
  const double per_class = c.size() / 2 * 500.0;
  const double se = std::sqrt(0.2 * 0.8 / per_class);
  for (int n = 0; n < 2; ++n) {
    CHECK(std::abs(h.row(n).sum() - 1.0) <= 1e-12);
    for (int i = 0; i < M; ++i) CHECK(std::abs(h(n, i) - 0.2) <= 3 * se);
  }
  CHECK_THROWS_AS(routing_histogram(Eigen::MatrixXd::Zero(8, M), c, 0, 1.0, 3), std::invalid_argument);
}

TEST_CASE("routing concentration") {
  SpecializationReport r;
  r.sets = {{0, 1}, {2}, {}};
  Eigen::MatrixXd h(3, 3);
  h << 0.5, 0.4, 0.1,   //
      0.0, 0.05, 0.95,  //
      0.3, 0.3, 0.4;
  const auto c = routing_concentration(h, r);
  CHECK(c.mass_on_set[0] == doctest::Approx(0.9));
  CHECK(c.spread_ratio[0] == doctest::Approx(1.25));
  CHECK(c.mass_on_set[1] == doctest::Approx(0.95));
  CHECK(c.spread_ratio[1] == 1.0);
  CHECK(c.mass_on_set[2] == 0.0);
  CHECK(std::isinf(c.spread_ratio[2]));
  CHECK(c.min_mass() == 0.0);
  CHECK(std::isinf(c.max_spread()));
}

TEST_CASE("attention probe") {
  const auto dict = canonical_basis_dictionary(2);
  const Corpus probe = build_corpus(dict, 5, 0.1, 2, 4);
  ModelState m;
  m.theta = Eigen::MatrixXd::Zero(4, 2);
  m.experts = {{dict.cls_signal(0), Eigen::MatrixXd::Zero(4, 4)},
               {dict.cls_signal(1), Eigen::MatrixXd::Zero(4, 4)}};
  SUBCASE("zero key-query gives 1/L everywhere") {
    const auto rows = attention_probe(m, dict, probe);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
      CHECK(r.class_index == r.expert);
      CHECK(r.num_samples == probe.size() / 2);
      for (double p : {r.p_vv, r.p_vc, r.p_cv, r.p_vxi}) CHECK(p == doctest::Approx(0.2).epsilon(1e-14));
    }
  }
  SUBCASE("a v v^T key-query concentrates on the signal token") {
    for (int i = 0; i < 2; ++i) {
      const Eigen::VectorXd v = dict.cls_signal(i);
      m.experts[i].w_kq = 8.0 * v * v.transpose();
    }
    for (const auto& r : attention_probe(m, dict, probe)) {
      CHECK(r.p_vv > r.p_vc);
      CHECK(r.p_vv > r.p_vxi);
      CHECK(r.p_vv + r.p_vc + r.p_vxi <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("signal projection probe") {
  const auto dict = build_dictionary(12, 3, 1);
  const Eigen::MatrixXd p = signal_projection_probe({2.0 * dict.cls_signal(1)}, dict);
  REQUIRE(p.rows() == 1);
  REQUIRE(p.cols() == 6);
  for (int j = 0; j < 6; ++j) CHECK(std::abs(p(0, j) - (j == 4 ? 2.0 : 0.0)) <= 1e-12);

  // Initialization scale: projections are O(sigma0).
  Rng rng(2);
  const double sigma0 = 0.1;
  const auto big = build_dictionary(64, 4, 3);
  const ModelState m = init_model(64, 12, sigma0, rng);
  CHECK(signal_projection_probe(expert_heads(m), big).cwiseAbs().maxCoeff() <= 5 * sigma0);
}

TEST_CASE("log-linear rate fit") {
  std::vector<int> t;
  std::vector<double> exp_loss, inv_loss;
  for (int e = 1; e <= 200; ++e) {
    t.push_back(e);
    exp_loss.push_back(std::exp(-0.1 * e));
  }
  const RateFit f = fit_log_linear(t, exp_loss);
  CHECK(std::abs(f.slope + 0.1) <= 1e-10);
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.first_epoch == 1);
  CHECK(f.last_epoch == 200);

  t.clear();
  for (int e = 100; e <= 1000; ++e) {
    t.push_back(e);
    inv_loss.push_back(1.0 / e);
  }
  CHECK(std::abs(fit_log_linear(t, inv_loss).slope) <= 0.003);

  CHECK_THROWS_AS(fit_log_linear({1, 2}, {1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(fit_log_linear({1}, {1.0}), std::invalid_argument);
}

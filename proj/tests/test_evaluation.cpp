#include "csht/evaluation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace csht;

TEST_CASE("mae") {
  Matrix p(1, 2), t(1, 2);
  p << 0.01, -0.01;
  t << 0.02, 0.01;
  CHECK(mae(p, t) == doctest::Approx(0.015).epsilon(1e-12));
  CHECK(mae(t, t) == 0.0);
  Matrix wrong(2, 1);
  CHECK_THROWS(mae(p, wrong));
  // scale equivariance
  CHECK(mae(Matrix(3 * p), Matrix(3 * t)) == doctest::Approx(3 * mae(p, t)));
}

TEST_CASE("regime accuracy") {
  IntVector a(4), b(4);
  a << 1, 1, 0, 0;
  b << 1, 0, 0, 0;
  CHECK(regime_accuracy(a, a) == 1.0);
  CHECK(regime_accuracy(a, b) == doctest::Approx(0.75));
  IntVector c = IntVector::Ones(4) - a;
  CHECK(regime_accuracy(a, c) == 0.0);
  IntVector bad(4);
  bad << 2, 0, 0, 0;
  CHECK_THROWS(regime_accuracy(bad, a));
  CHECK_THROWS(regime_accuracy(IntVector(), IntVector()));
}

TEST_CASE("ndcg basics") {
  SUBCASE("perfect ranking scores 1") {
    Vector s(4);
    s << 4, 3, 2, 1;
    CHECK(*ndcg_at_k(s, {1, 1, 0, 0}, 2) == doctest::Approx(1.0));
  }
  SUBCASE("single relevant asset ranked third of three") {
    Vector s(3);
    s << 1, 2, 3;  // asset 0 (the relevant one) sorts last
    const auto v = ndcg_at_k(s, {1, 0, 0}, 3);
    REQUIRE(v.has_value());
    CHECK(*v == doctest::Approx(0.5).epsilon(1e-12));  // 1/log2(4)
  }
  SUBCASE("all-zero relevance is undefined") {
    Vector s(3);
    s << 1, 2, 3;
    CHECK(!ndcg_at_k(s, {0, 0, 0}, 3).has_value());
  }
  SUBCASE("k out of range") {
    Vector s(3);
    s << 1, 2, 3;
    CHECK_THROWS(ndcg_at_k(s, {1, 0, 0}, 4));
    CHECK_THROWS(ndcg_at_k(s, {1, 0, 0}, 0));
  }
  SUBCASE("ties break by ascending asset id") {
    Vector s = Vector::Zero(3);
    // all scores tied: ranking is 0,1,2; relevant asset 2 lands third
    const auto v = ndcg_at_k(s, {0, 0, 1}, 3);
    CHECK(*v == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("ndcg equals brute-force enumeration over all 120 orderings") {
  // 5 assets, 2 relevant; every permutation realized via descending scores
  std::vector<int> perm = {0, 1, 2, 3, 4};
  const std::vector<int> rel = {1, 0, 1, 0, 0};
  std::sort(perm.begin(), perm.end());
  int checked = 0;
  do {
    // perm[r] = asset placed at rank r; give it score 5-r
    Vector scores(5);
    for (int r = 0; r < 5; ++r) scores(perm[r]) = 5.0 - r;
    for (int k = 1; k <= 5; ++k) {
      // brute force straight from the permutation
      double dcg = 0.0;
      for (int r = 0; r < k; ++r) dcg += rel[perm[r]] / std::log2(r + 2.0);
      double idcg = 1.0 / std::log2(2.0) + (k >= 2 ? 1.0 / std::log2(3.0) : 0.0);
      const auto got = ndcg_at_k(scores, rel, k);
      REQUIRE(got.has_value());
      CHECK(*got == doctest::Approx(dcg / idcg).epsilon(1e-12));
    }
    ++checked;
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(checked == 120);
}

TEST_CASE("ndcg is invariant under strictly monotone score transforms") {
  Vector s(5);
  s << 0.3, -0.2, 1.4, 0.01, -0.7;
  const std::vector<int> rel = {0, 1, 0, 1, 0};
  const auto base = ndcg_at_k(s, rel, 3);
  Vector cubed = s.array().pow(3);           // strictly monotone
  Vector affine = 100.0 * s.array() + 42.0;  // strictly monotone
  CHECK(*ndcg_at_k(cubed, rel, 3) == doctest::Approx(*base));
  CHECK(*ndcg_at_k(affine, rel, 3) == doctest::Approx(*base));
}

namespace {

EvalInputs toy_inputs(int days, int assets) {
  EvalInputs in;
  in.anchors.resize(days);
  std::iota(in.anchors.begin(), in.anchors.end(), 0);
  in.pred_raw.resize(days, assets);
  in.target_raw.resize(days, assets);
  for (int s = 0; s < days; ++s)
    for (int a = 0; a < assets; ++a)
      in.target_raw(s, a) = 0.01 * ((s * 7 + a * 3) % 11 - 5);
  in.cls_logit = Vector::Zero(days);
  in.labels = IntVector::Constant(days, -1);
  in.graph_index.assign(days, 0);
  in.window_ranges = {{"2018-01-02", "2019-01-02"}};
  return in;
}

}  // namespace

TEST_CASE("aggregate_eval oracle bounds") {
  SUBCASE("oracle predictions: mae 0, ndcg 1, accuracy 1") {
    EvalInputs in = toy_inputs(12, 6);
    in.pred_raw = in.target_raw;
    for (int s = 0; s < 12; ++s) {
      in.labels(s) = s % 2;
      in.cls_logit(s) = in.labels(s) ? 3.0 : -3.0;
    }
    EvalResult r = aggregate_eval(in, Task::Both, 3);
    CHECK(r.mae == 0.0);
    CHECK(r.ndcg == doctest::Approx(1.0));
    CHECK(r.accuracy == doctest::Approx(1.0));
    CHECK(r.days == 12);
    REQUIRE(r.per_window.size() == 1);
    CHECK(r.per_window[0].days == 12);
  }
  SUBCASE("constant-zero model: mae equals mean absolute target") {
    EvalInputs in = toy_inputs(9, 4);
    in.pred_raw.setZero();
    EvalResult r = aggregate_eval(in, Task::Regression, 2);
    CHECK(r.mae == doctest::Approx(in.target_raw.array().abs().mean()).epsilon(1e-12));
    CHECK(std::isnan(r.accuracy));  // no labels in a regression run
  }
}

TEST_CASE("summaries across seeds") {
  std::vector<double> vals = {1.0, 2.0, 3.0};
  MetricSummary s = summarize(vals);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.stdev == doctest::Approx(1.0));
  MetricSummary nan_only = summarize({std::numeric_limits<double>::quiet_NaN()});
  CHECK(std::isnan(nan_only.mean));

  EvalReport report;
  for (int i = 0; i < 3; ++i) {
    EvalResult r;
    r.seed = i;
    r.mae = 0.01 * (i + 1);
    r.accuracy = 0.5;
    r.ndcg = 1.0;
    r.alignment = 1.0;
    report.per_seed.push_back(r);
  }
  CHECK(report.mae_summary().mean == doctest::Approx(0.02));
  CHECK(report.accuracy_summary().stdev == doctest::Approx(0.0));
}

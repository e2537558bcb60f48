#include "csht/model.hpp"

#include "csht/evaluation.hpp"
#include "csht/granger.hpp"
#include "csht/sphere.hpp"
#include "csht/synthetic.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace csht;
using csht::testing::benchmark_spec;

namespace {

struct TrainFixture {
  SeriesPanel panel;
  NodeLayout layout;
  GraphSchedule schedule;
  ModelConfig cfg;
  IntVector labels;

  explicit TrainFixture(int length = 240, uint64_t seed = 91) {
    PlantedSpec spec = make_asset_spec(2, 0, false, length, seed);
    spec.edges = {{2, 1, 0, 0.8}, {3, 2, 1, 0.7}};
    panel = gen_var_process(spec).first;

    cfg.hidden_width = 16;
    cfg.heads = 2;
    cfg.ffn_width = 24;
    cfg.max_lag = 2;
    cfg.batch_size = 16;
    cfg.seed = 7;
    cfg.learning_rate = 3e-3;
    cfg.max_epochs = 8;
    cfg.patience = 20;

    DiscoveryConfig d;
    d.max_lag = cfg.max_lag;
    d.alpha = 0.01;
    CausalHypergraph g = build_hypergraph(panel, d);
    layout = NodeLayout::build(panel, cfg.max_lag);
    schedule = GraphSchedule::build({g}, layout, cfg.use_causal_mask);

    labels = IntVector::Constant(panel.days(), -1);
    for (int t = 0; t + 3 < panel.days(); ++t) labels(t) = (t / 5) % 2;
  }
};

double check_gradients(const ModelState& state, const WindowBatch& batch,
                       const GraphSchedule& schedule) {
  const ModelGrads analytic = grads_for_batch(state, batch, schedule);
  const Vector flat_grad = flatten_params(analytic.g);
  const Vector flat0 = flatten_params(state.params);
  const double h = 1e-5;
  double worst = 0.0;
  ModelState probe = state;
  for (Eigen::Index i = 0; i < flat0.size(); ++i) {
    Vector plus = flat0, minus = flat0;
    plus(i) += h;
    minus(i) -= h;
    unflatten_params(probe.params, plus);
    const double lp = loss_for_batch(probe, batch, schedule);
    unflatten_params(probe.params, minus);
    const double lm = loss_for_batch(probe, batch, schedule);
    const double fd = (lp - lm) / (2 * h);
    const double a = flat_grad(i);
    // identically-zero gradients (softmax-invariant directions) leave only
    // finite-difference rounding noise behind; skip those
    if (std::fabs(a - fd) < 1e-7) continue;
    const double rel = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-8});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
  // 6-node micro-model: 2 assets + their sentiment series at tau = 1
  PlantedSpec spec = make_asset_spec(2, 0, false, 40, 4711);
  spec.edges = {{2, 1, 0, 0.6}};
  SeriesPanel panel = gen_var_process(spec).first;

  ModelConfig cfg;
  cfg.hidden_width = 8;
  cfg.heads = 2;
  cfg.ffn_width = 16;
  cfg.max_lag = 1;
  cfg.batch_size = 4;
  cfg.seed = 31;
  cfg.task = Task::Both;

  NodeLayout layout = NodeLayout::build(panel, cfg.max_lag);
  REQUIRE(layout.size() == 6);
  CausalHypergraph graph;
  graph.window_begin = panel.dates.front();
  graph.window_end = panel.dates.back();
  Hyperedge e;
  e.target = "A0";
  e.parents = {{Modality::Sentiment, "A0", 1}, {Modality::Return, "A1", 1}};
  graph.edges.push_back(e);

  IntVector labels = IntVector::Constant(panel.days(), -1);
  for (int t = 0; t + 3 < panel.days(); ++t) labels(t) = t % 2;

  SUBCASE("spherical attention with causal mask (through projection and masked softmax)") {
    GraphSchedule schedule = GraphSchedule::build({graph}, layout, true);
    ModelState state = init_model(layout, cfg);
    WindowBatch batch =
        assemble_batch(panel, layout, {3, 11, 22}, schedule, &labels, 0.0, nullptr);
    CHECK(check_gradients(state, batch, schedule) < 1e-4);
  }

  SUBCASE("euclidean attention without the mask") {
    ModelConfig euc = cfg;
    euc.use_causal_mask = false;
    euc.use_spherical_attention = false;
    GraphSchedule schedule = GraphSchedule::build({graph}, layout, false);
    ModelState state = init_model(layout, euc);
    WindowBatch batch =
        assemble_batch(panel, layout, {5, 17}, schedule, &labels, 0.0, nullptr);
    CHECK(check_gradients(state, batch, schedule) < 1e-4);
  }
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  TrainFixture f;
  f.cfg.learning_rate = 0.0;
  f.cfg.max_epochs = 3;
  ModelState state = init_model(f.layout, f.cfg);
  const Vector before = flatten_params(state.params);
  TrainResult r = train(state, f.panel, f.schedule, nullptr, 0, 150, 150, 200);
  const Vector after = flatten_params(state.params);
  CHECK(before == after);
  CHECK(r.log.size() == 4);  // epoch 0 plus three epochs
}

TEST_CASE("training is deterministic for a fixed seed") {
  TrainFixture f;
  f.cfg.max_epochs = 3;
  f.cfg.input_noise_sigma = 0.05;  // exercise the noise stream too
  ModelState s1 = init_model(f.layout, f.cfg);
  ModelState s2 = init_model(f.layout, f.cfg);
  TrainResult r1 = train(s1, f.panel, f.schedule, nullptr, 0, 150, 150, 200);
  TrainResult r2 = train(s2, f.panel, f.schedule, nullptr, 0, 150, 150, 200);
  REQUIRE(r1.log.size() == r2.log.size());
  for (size_t i = 0; i < r1.log.size(); ++i) {
    CHECK(r1.log[i].train_loss == r2.log[i].train_loss);
    CHECK(r1.log[i].valid_loss == r2.log[i].valid_loss);
  }
  CHECK(flatten_params(s1.params) == flatten_params(s2.params));
}

TEST_CASE("training reduces loss and keeps embeddings on the sphere") {
  TrainFixture f;
  ModelState state = init_model(f.layout, f.cfg);
  TrainResult r = train(state, f.panel, f.schedule, nullptr, 0, 150, 150, 200);
  CHECK(r.log.back().train_loss < r.log.front().train_loss);
  for (Eigen::Index i = 0; i < state.params.embed.rows(); ++i)
    CHECK(std::fabs(state.params.embed.row(i).norm() - 1.0) < 1e-9);
  // masked run keeps alignment pinned at 1
  CHECK(r.log.back().alignment == 1.0);
}

TEST_CASE("classification training consumes regime labels") {
  TrainFixture f;
  f.cfg.task = Task::Classification;
  f.cfg.max_epochs = 2;
  ModelState state = init_model(f.layout, f.cfg);
  CHECK_THROWS(train(state, f.panel, f.schedule, nullptr, 0, 150, 150, 200));
  TrainResult r = train(state, f.panel, f.schedule, &f.labels, 0, 150, 150, 200);
  CHECK(r.log.size() >= 2);
  CHECK(std::isfinite(r.log.back().valid_loss));
}

TEST_CASE("divergent training aborts with the log attached") {
  TrainFixture f;
  f.cfg.learning_rate = 3e3;  // wildly too large
  f.cfg.max_epochs = 40;
  f.cfg.patience = 40;
  ModelState state = init_model(f.layout, f.cfg);
  bool thrown = false;
  try {
    train(state, f.panel, f.schedule, nullptr, 0, 150, 150, 200);
  } catch (const TrainingDiverged& e) {
    thrown = true;
    CHECK(!e.log.empty());
  }
  CHECK(thrown);
}

TEST_CASE("evaluation is pure given fixed parameters") {
  TrainFixture f;
  ModelState state = init_model(f.layout, f.cfg);
  const auto targets = f.panel.target_indices();
  Matrix raw(f.panel.days(), static_cast<Eigen::Index>(targets.size()));
  for (size_t a = 0; a < targets.size(); ++a)
    raw.col(static_cast<Eigen::Index>(a)) = f.panel.values.col(targets[a]);
  EvalResult a = evaluate_model(state, f.panel, f.schedule, nullptr, nullptr, raw, 150,
                                f.panel.days());
  EvalResult b = evaluate_model(state, f.panel, f.schedule, nullptr, nullptr, raw, 150,
                                f.panel.days());
  CHECK(a.mae == b.mae);
  CHECK(a.ndcg == b.ndcg);
  CHECK(a.alignment == b.alignment);
  CHECK(a.days == b.days);
}

TEST_CASE("early stopping restores the best-validation parameters") {
  TrainFixture f;
  f.cfg.max_epochs = 6;
  f.cfg.patience = 2;
  f.cfg.learning_rate = 2e-2;  // noisy steps so validation wobbles
  ModelState state = init_model(f.layout, f.cfg);
  TrainResult r = train(state, f.panel, f.schedule, nullptr, 0, 150, 150, 200);
  REQUIRE(!r.log.empty());
  double best = r.log.front().valid_loss;
  for (const auto& row : r.log) best = std::min(best, row.valid_loss);
  CHECK(r.log[r.best_epoch].valid_loss == doctest::Approx(best));
}

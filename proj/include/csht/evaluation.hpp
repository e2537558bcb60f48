#pragma once

#include "csht/model.hpp"
#include "csht/panel.hpp"
#include "csht/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace csht {

/// Mean absolute error over all entries. Throws on empty or mismatched shapes.
double mae(const Matrix& predictions, const Matrix& targets);

/// Fraction of matching binary labels.
double regime_accuracy(const IntVector& predicted, const IntVector& truth);

/// NDCG at k with gain rel / log2(rank + 1); ties in the scores break by
/// ascending asset index. nullopt when the relevance vector has no positives.
std::optional<double> ndcg_at_k(const Vector& scores, const std::vector<int>& relevance,
                                int k = 10);

struct WindowMetrics {
  std::string window_begin, window_end;
  int days = 0;
  double mae = 0.0;
  double accuracy = 0.0;   // NaN when the task has no labels
  double ndcg = 0.0;       // NaN when undefined on every day
  double alignment = 0.0;  // NaN when undefined
};

/// Metrics for one trained model on one split.
struct EvalResult {
  uint64_t seed = 0;
  int days = 0;
  double mae = 0.0;
  double accuracy = 0.0;
  double ndcg = 0.0;
  double alignment = 0.0;
  std::vector<WindowMetrics> per_window;
};

/// Per-day predictions and realized values, all in raw return units.
struct EvalInputs {
  std::vector<int> anchors;
  Matrix pred_raw;    // days x targets
  Vector cls_logit;   // days
  Matrix target_raw;  // days x targets (realized next-day returns)
  IntVector labels;   // -1 where absent
  std::vector<int> graph_index;
  std::vector<std::pair<std::string, std::string>> window_ranges;
  AttentionStats attn;
};

/// NDCG relevance is membership in the realized top-k returns per day,
/// averaged over days (undefined days skipped).
EvalResult aggregate_eval(const EvalInputs& in, Task task, int k = 10);

/// Runs the model over the split's anchors, denormalizes predictions back to
/// raw return units via the "ret:<asset>" stats and aggregates all metrics.
/// `dump`, when given, receives the per-day inputs for plotting.
EvalResult evaluate_model(const ModelState& state, const SeriesPanel& zpanel,
                          const GraphSchedule& schedule, const NormStats* stats,
                          const IntVector* regime_labels, const Matrix& raw_returns,
                          int row_begin, int row_end, int k = 10,
                          EvalInputs* dump = nullptr);

struct MetricSummary {
  double mean = 0.0;
  double stdev = 0.0;
};

MetricSummary summarize(const std::vector<double>& values);

/// Protocol output: one EvalResult per seed plus mean/stdev rows.
struct EvalReport {
  std::vector<EvalResult> per_seed;
  Task task = Task::Regression;
  int ndcg_k = 10;

  MetricSummary mae_summary() const;
  MetricSummary accuracy_summary() const;
  MetricSummary ndcg_summary() const;
  MetricSummary alignment_summary() const;
};

}  // namespace csht

#include "csht/evaluation.hpp"

#include "csht/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace csht {

namespace {
const double kNan = std::numeric_limits<double>::quiet_NaN();
}

double mae(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw std::invalid_argument("evaluation: mae shape mismatch");
  if (predictions.size() == 0) throw std::invalid_argument("evaluation: mae of nothing");
  return (predictions - targets).array().abs().mean();
}

double regime_accuracy(const IntVector& predicted, const IntVector& truth) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("evaluation: label length mismatch");
  if (predicted.size() == 0) throw std::invalid_argument("evaluation: no labels");
  int hits = 0;
  for (Eigen::Index i = 0; i < predicted.size(); ++i) {
    if ((predicted(i) != 0 && predicted(i) != 1) || (truth(i) != 0 && truth(i) != 1))
      throw std::invalid_argument("evaluation: labels must be binary");
    hits += predicted(i) == truth(i);
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::optional<double> ndcg_at_k(const Vector& scores, const std::vector<int>& relevance,
                                int k) {
  const int n = static_cast<int>(scores.size());
  if (static_cast<int>(relevance.size()) != n)
    throw std::invalid_argument("evaluation: ndcg shape mismatch");
  if (k < 1 || k > n)
    throw std::invalid_argument("evaluation: k must lie in [1, #assets]");
  int positives = 0;
  for (int r : relevance) {
    if (r != 0 && r != 1) throw std::invalid_argument("evaluation: relevance must be binary");
    positives += r;
  }
  if (positives == 0) return std::nullopt;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores(a) != scores(b)) return scores(a) > scores(b);
    return a < b;
  });
  double dcg = 0.0;
  for (int r = 0; r < k; ++r)
    dcg += relevance[order[r]] / std::log2(static_cast<double>(r) + 2.0);
  double idcg = 0.0;
  for (int r = 0; r < std::min(k, positives); ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

namespace {

struct Accumulator {
  std::vector<double> abs_errors;
  std::vector<double> ndcgs;
  std::vector<int> pred_labels, true_labels;

  void add_day(const EvalInputs& in, int s, Task task, int k) {
    const int nt = static_cast<int>(in.pred_raw.cols());
    if (task != Task::Classification) {
      for (int a = 0; a < nt; ++a)
        abs_errors.push_back(std::fabs(in.pred_raw(s, a) - in.target_raw(s, a)));
      // realized top-k defines the day's relevant set
      std::vector<int> order(nt);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (in.target_raw(s, a) != in.target_raw(s, b))
          return in.target_raw(s, a) > in.target_raw(s, b);
        return a < b;
      });
      std::vector<int> rel(nt, 0);
      for (int r = 0; r < std::min(k, nt); ++r) rel[order[r]] = 1;
      const auto nd = ndcg_at_k(in.pred_raw.row(s).transpose(), rel, std::min(k, nt));
      if (nd) ndcgs.push_back(*nd);
    }
    if (task != Task::Regression && in.labels(s) >= 0) {
      pred_labels.push_back(in.cls_logit(s) > 0 ? 1 : 0);
      true_labels.push_back(in.labels(s));
    }
  }

  void fill(double& out_mae, double& out_acc, double& out_ndcg) const {
    out_mae = abs_errors.empty() ? kNan : mean_of(abs_errors.begin(), abs_errors.end());
    out_ndcg = ndcgs.empty() ? kNan : mean_of(ndcgs.begin(), ndcgs.end());
    if (pred_labels.empty()) {
      out_acc = kNan;
    } else {
      IntVector p(pred_labels.size()), t(true_labels.size());
      for (size_t i = 0; i < pred_labels.size(); ++i) {
        p(static_cast<Eigen::Index>(i)) = pred_labels[i];
        t(static_cast<Eigen::Index>(i)) = true_labels[i];
      }
      out_acc = regime_accuracy(p, t);
    }
  }
};

}  // namespace

EvalResult aggregate_eval(const EvalInputs& in, Task task, int k) {
  const int days = static_cast<int>(in.anchors.size());
  if (days == 0) throw std::invalid_argument("evaluation: empty split");

  EvalResult out;
  out.days = days;
  Accumulator all;
  std::map<int, Accumulator> by_window;
  std::map<int, int> window_days;
  for (int s = 0; s < days; ++s) {
    all.add_day(in, s, task, k);
    by_window[in.graph_index[s]].add_day(in, s, task, k);
    window_days[in.graph_index[s]] += 1;
  }
  all.fill(out.mae, out.accuracy, out.ndcg);
  const auto align = in.attn.alignment();
  out.alignment = align ? *align : kNan;

  for (const auto& [gi, acc] : by_window) {
    WindowMetrics wm;
    wm.window_begin = in.window_ranges[gi].first;
    wm.window_end = in.window_ranges[gi].second;
    wm.days = window_days[gi];
    acc.fill(wm.mae, wm.accuracy, wm.ndcg);
    wm.alignment = out.alignment;  // attention stats are pooled over the run
    out.per_window.push_back(wm);
  }
  return out;
}

EvalResult evaluate_model(const ModelState& state, const SeriesPanel& zpanel,
                          const GraphSchedule& schedule, const NormStats* stats,
                          const IntVector* regime_labels, const Matrix& raw_returns,
                          int row_begin, int row_end, int k, EvalInputs* dump) {
  const auto& cfg = state.config;
  const auto anchors = anchors_for_range(zpanel, cfg.max_lag, row_begin, row_end,
                                         cfg.task, cfg.regime_horizon);
  if (anchors.empty()) throw std::invalid_argument("evaluation: no usable anchors in split");
  const int nt = state.layout.num_targets();
  if (raw_returns.cols() != nt || raw_returns.rows() != zpanel.days())
    throw std::invalid_argument("evaluation: raw return matrix shape mismatch");

  EvalInputs in;
  in.anchors = anchors;
  in.pred_raw.resize(static_cast<Eigen::Index>(anchors.size()), nt);
  in.cls_logit.resize(static_cast<Eigen::Index>(anchors.size()));
  in.target_raw.resize(static_cast<Eigen::Index>(anchors.size()), nt);
  in.labels = IntVector::Constant(static_cast<Eigen::Index>(anchors.size()), -1);
  in.graph_index.resize(anchors.size());
  for (const auto& g : schedule.graphs)
    in.window_ranges.push_back({g.window_begin, g.window_end});

  // denormalization factors per target
  Vector scale = Vector::Ones(nt), shift = Vector::Zero(nt);
  if (stats) {
    for (int a = 0; a < nt; ++a) {
      const int si = stats->find("ret:" + state.layout.targets[a]);
      if (si < 0)
        throw std::runtime_error("evaluation: no stats for target " +
                                 state.layout.targets[a]);
      if (!stats->degenerate[si]) {
        scale(a) = stats->stdev(si);
        shift(a) = stats->mean(si);
      }
    }
  }

  const size_t bs = static_cast<size_t>(cfg.batch_size);
  AttentionStats attn;
  for (size_t at = 0; at < anchors.size(); at += bs) {
    const size_t hi = std::min(anchors.size(), at + bs);
    std::vector<int> chunk(anchors.begin() + at, anchors.begin() + hi);
    WindowBatch b =
        assemble_batch(zpanel, state.layout, chunk, schedule, regime_labels, 0.0, nullptr);
    ForwardResult fr = forward(state, b, schedule);
    attn.forbidden_mass += fr.attn.forbidden_mass;
    attn.max_row_sum_dev = std::max(attn.max_row_sum_dev, fr.attn.max_row_sum_dev);
    attn.align_ratio_sum += fr.attn.align_ratio_sum;
    attn.align_ratio_count += fr.attn.align_ratio_count;
    attn.align_undefined += fr.attn.align_undefined;
    for (size_t s = 0; s < chunk.size(); ++s) {
      const Eigen::Index row = static_cast<Eigen::Index>(at + s);
      const int t = chunk[s];
      for (int a = 0; a < nt; ++a) {
        in.pred_raw(row, a) = fr.reg_pred(static_cast<Eigen::Index>(s), a) * scale(a) + shift(a);
        in.target_raw(row, a) = raw_returns(t + 1, a);
      }
      in.cls_logit(row) = fr.cls_logit(static_cast<Eigen::Index>(s));
      in.labels(row) = b.cls_labels(static_cast<Eigen::Index>(s));
      in.graph_index[at + s] = b.graph_index[s];
    }
  }
  in.attn = attn;

  EvalResult out = aggregate_eval(in, cfg.task, k);
  out.seed = cfg.seed;
  if (dump) *dump = in;
  return out;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  std::vector<double> finite;
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) {
    s.mean = kNan;
    s.stdev = kNan;
    return s;
  }
  s.mean = mean_of(finite.begin(), finite.end());
  s.stdev = stdev_of(finite.begin(), finite.end());
  return s;
}

namespace {
MetricSummary pick(const std::vector<EvalResult>& rs, double EvalResult::*field) {
  std::vector<double> v;
  v.reserve(rs.size());
  for (const auto& r : rs) v.push_back(r.*field);
  return summarize(v);
}
}  // namespace

MetricSummary EvalReport::mae_summary() const { return pick(per_seed, &EvalResult::mae); }
MetricSummary EvalReport::accuracy_summary() const {
  return pick(per_seed, &EvalResult::accuracy);
}
MetricSummary EvalReport::ndcg_summary() const { return pick(per_seed, &EvalResult::ndcg); }
MetricSummary EvalReport::alignment_summary() const {
  return pick(per_seed, &EvalResult::alignment);
}

}  // namespace csht

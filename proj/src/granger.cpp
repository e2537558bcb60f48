#include "csht/granger.hpp"

#include "csht/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace csht {

std::set<std::pair<std::string, std::string>> CausalHypergraph::source_target_pairs()
    const {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& e : edges) {
    for (const auto& p : e.parents) {
      const std::string key = std::string(modality_name(p.modality)) + ":" + p.series;
      out.insert({key, e.target});
    }
  }
  return out;
}

const Hyperedge* CausalHypergraph::edge_for(const std::string& target) const {
  for (const auto& e : edges)
    if (e.target == target) return &e;
  return nullptr;
}

OlsFit fit_lagged_ols(const SeriesPanel& panel, const std::string& target_id,
                      const std::vector<LaggedNode>& predictors, int max_lag) {
  const int tgt = panel.find(Modality::Return, target_id);
  if (tgt < 0) throw std::invalid_argument("granger: unknown target '" + target_id + "'");
  const int days = panel.days();
  const int n = days - max_lag;
  const int cols = 1 + static_cast<int>(predictors.size());
  if (n <= cols + 1)
    throw std::invalid_argument("granger: too few observations (" + std::to_string(n) +
                                ") for " + std::to_string(cols) + " regressors");

  Matrix x(n, cols);
  x.col(0).setOnes();
  for (size_t j = 0; j < predictors.size(); ++j) {
    const auto& node = predictors[j];
    if (node.lag < 1 || node.lag > max_lag)
      throw std::invalid_argument("granger: predictor lag outside [1, maxLag]: " +
                                  node.str());
    const int col = panel.find(node.modality, node.series);
    if (col < 0) throw std::invalid_argument("granger: unknown predictor " + node.str());
    for (int t = 0; t < n; ++t) x(t, 1 + static_cast<int>(j)) = panel.values(max_lag + t - node.lag, col);
  }
  Vector y(n);
  for (int t = 0; t < n; ++t) y(t) = panel.values(max_lag + t, tgt);

  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < cols) {
    // Collinear predictors occupy the trailing pivot positions.
    const auto perm = qr.colsPermutation().indices();
    std::string names;
    for (int j = qr.rank(); j < cols; ++j) {
      const int orig = perm(j);
      if (orig == 0) { names += " intercept"; continue; }
      names += " " + predictors[orig - 1].str();
    }
    throw std::runtime_error("granger: rank-deficient design for target '" + target_id +
                             "', collinear:" + names);
  }

  OlsFit fit;
  fit.target = target_id;
  fit.predictors = predictors;
  fit.coefficients = qr.solve(y);
  fit.rss = (y - x * fit.coefficients).squaredNorm();
  fit.n_obs = n;
  fit.max_lag = max_lag;
  return fit;
}

GrangerTestResult granger_f_test(const OlsFit& restricted, const OlsFit& full) {
  if (restricted.target != full.target)
    throw std::invalid_argument("granger: F-test targets differ");
  if (restricted.n_obs != full.n_obs)
    throw std::invalid_argument("granger: F-test fits use different observations");
  for (const auto& p : restricted.predictors)
    if (std::find(full.predictors.begin(), full.predictors.end(), p) ==
        full.predictors.end())
      throw std::invalid_argument("granger: restricted model is not nested in full");

  const int q = static_cast<int>(full.predictors.size() - restricted.predictors.size());
  if (q <= 0) {
    // Identical regressor sets: no added explanatory power to test.
    GrangerTestResult r;
    r.target = full.target;
    r.f_statistic = 0.0;
    r.p_value = 1.0;
    r.rss_restricted = restricted.rss;
    r.rss_full = full.rss;
    r.dof_num = 0;
    r.dof_den = full.n_obs - 1 - static_cast<int>(full.predictors.size());
    return r;
  }
  const int k = 1 + static_cast<int>(full.predictors.size());
  const int dof_den = full.n_obs - k;
  if (dof_den < 1) throw std::invalid_argument("granger: non-positive denominator dof");

  GrangerTestResult r;
  r.target = full.target;
  for (const auto& p : full.predictors)
    if (std::find(restricted.predictors.begin(), restricted.predictors.end(), p) ==
        restricted.predictors.end())
      r.source_group.push_back(p);
  r.rss_restricted = restricted.rss;
  r.rss_full = full.rss;
  r.dof_num = q;
  r.dof_den = dof_den;

  const double gain = std::max(0.0, restricted.rss - full.rss);
  if (full.rss <= 0.0) {
    if (gain > 0.0) {
      r.f_statistic = std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    } else {
      r.f_statistic = 0.0;
      r.p_value = 1.0;
    }
    return r;
  }
  r.f_statistic = (gain / q) / (full.rss / dof_den);
  r.p_value = f_upper_tail<double>(r.f_statistic, q, dof_den);
  return r;
}

std::vector<int> bh_fdr(const std::vector<double>& p_values, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("granger: alpha must lie in (0, 1)");
  const int m = static_cast<int>(p_values.size());
  if (m == 0) return {};
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("granger: p-value outside [0, 1]");

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (p_values[a] != p_values[b]) return p_values[a] < p_values[b];
    return a < b;
  });
  int cutoff = -1;
  for (int i = 0; i < m; ++i)
    if (p_values[order[i]] <= (i + 1) * alpha / m) cutoff = i;
  std::vector<int> accepted(order.begin(), order.begin() + (cutoff + 1));
  std::sort(accepted.begin(), accepted.end());
  return accepted;
}

namespace {

std::vector<LaggedNode> lag_block(const SeriesInfo& s, int max_lag) {
  std::vector<LaggedNode> block;
  block.reserve(max_lag);
  for (int l = 1; l <= max_lag; ++l) block.push_back({s.modality, s.id, l});
  return block;
}

void append_block(std::vector<LaggedNode>& dst, const std::vector<LaggedNode>& block) {
  dst.insert(dst.end(), block.begin(), block.end());
}

/// max over lags 1..K of |corr| between the lagged source and the target.
double screen_score(const SeriesPanel& panel, int src, int tgt, int max_lag) {
  const int n = panel.days() - max_lag;
  Vector y(n);
  for (int t = 0; t < n; ++t) y(t) = panel.values(max_lag + t, tgt);
  const double ym = y.mean();
  const double ys = (y.array() - ym).matrix().norm();
  double best = 0.0;
  for (int l = 1; l <= max_lag; ++l) {
    Vector xv(n);
    for (int t = 0; t < n; ++t) xv(t) = panel.values(max_lag + t - l, src);
    const double xm = xv.mean();
    const double xs = (xv.array() - xm).matrix().norm();
    if (xs <= 0.0 || ys <= 0.0) continue;
    const double c = std::fabs(((xv.array() - xm) * (y.array() - ym)).sum() / (xs * ys));
    best = std::max(best, c);
  }
  return best;
}

}  // namespace

CausalHypergraph build_hypergraph(const SeriesPanel& panel, const DiscoveryConfig& cfg) {
  if (cfg.max_lag < 1) throw std::invalid_argument("granger: maxLag must be >= 1");
  const int min_days = cfg.max_lag + 2 * cfg.max_lag + 1 + 2;
  if (panel.days() < min_days)
    throw std::invalid_argument("granger: panel of " + std::to_string(panel.days()) +
                                " days is shorter than maxLag plus the minimum fit length");

  // Constant series can neither predict nor be predicted.
  std::vector<bool> usable(panel.num_series(), true);
  for (int j = 0; j < panel.num_series(); ++j) {
    const double sd = stdev_of(panel.values.col(j).data(),
                               panel.values.col(j).data() + panel.days());
    if (sd <= 0.0) {
      usable[j] = false;
      std::cerr << "granger: warning: skipping constant series "
                << panel.series_key(j) << "\n";
    }
  }

  CausalHypergraph graph;
  graph.window_begin = panel.dates.front();
  graph.window_end = panel.dates.back();

  struct PendingTest {
    int target_col;
    int source_col;
  };
  std::vector<PendingTest> pending;
  std::map<int, OlsFit> restricted_fits;

  for (int tgt : panel.target_indices()) {
    if (!usable[tgt]) continue;
    std::vector<int> candidates;
    for (int src = 0; src < panel.num_series(); ++src)
      if (src != tgt && usable[src]) candidates.push_back(src);
    if (cfg.max_candidates > 0 &&
        static_cast<int>(candidates.size()) > cfg.max_candidates) {
      std::vector<std::pair<double, int>> scored;
      scored.reserve(candidates.size());
      for (int src : candidates)
        scored.push_back({-screen_score(panel, src, tgt, cfg.max_lag), src});
      std::stable_sort(scored.begin(), scored.end());
      candidates.clear();
      for (int i = 0; i < cfg.max_candidates; ++i) candidates.push_back(scored[i].second);
      std::sort(candidates.begin(), candidates.end());
    }
    restricted_fits.emplace(
        tgt, fit_lagged_ols(panel, panel.series[tgt].id,
                            lag_block(panel.series[tgt], cfg.max_lag), cfg.max_lag));
    for (int src : candidates) pending.push_back({tgt, src});
  }

  std::vector<double> p_values;
  p_values.reserve(pending.size());
  for (const auto& pt : pending) {
    const auto& restricted = restricted_fits.at(pt.target_col);
    std::vector<LaggedNode> preds = restricted.predictors;
    append_block(preds, lag_block(panel.series[pt.source_col], cfg.max_lag));
    const OlsFit full =
        fit_lagged_ols(panel, panel.series[pt.target_col].id, preds, cfg.max_lag);
    GrangerTestResult r = granger_f_test(restricted, full);
    graph.tests.push_back(r);
    p_values.push_back(r.p_value);
  }
  graph.num_tests = static_cast<int>(pending.size());

  const std::vector<int> accepted = bh_fdr(p_values, cfg.alpha);
  std::map<int, std::vector<int>> parents_by_target;
  for (int idx : accepted)
    parents_by_target[pending[idx].target_col].push_back(pending[idx].source_col);

  std::set<LaggedNode> node_set;
  for (const auto& [tgt, sources] : parents_by_target) {
    Hyperedge edge;
    edge.target = panel.series[tgt].id;
    std::vector<LaggedNode> preds = restricted_fits.at(tgt).predictors;
    for (int src : sources) {
      const auto block = lag_block(panel.series[src], cfg.max_lag);
      append_block(edge.parents, block);
      append_block(preds, block);
    }
    const OlsFit joint_full = fit_lagged_ols(panel, edge.target, preds, cfg.max_lag);
    edge.joint = granger_f_test(restricted_fits.at(tgt), joint_full);
    node_set.insert({Modality::Return, edge.target, 0});
    for (const auto& p : edge.parents) node_set.insert(p);
    graph.edges.push_back(std::move(edge));
  }
  graph.nodes.assign(node_set.begin(), node_set.end());
  return graph;
}

std::vector<CausalHypergraph> sliding_window_update(const SeriesPanel& panel,
                                                    int window_length, int stride,
                                                    const DiscoveryConfig& cfg) {
  if (window_length > panel.days())
    throw std::invalid_argument("granger: window longer than panel");
  if (stride < 1) throw std::invalid_argument("granger: stride must be >= 1");
  std::vector<CausalHypergraph> graphs;
  for (int start = 0; start + window_length <= panel.days(); start += stride)
    graphs.push_back(
        build_hypergraph(panel.slice_rows(start, start + window_length), cfg));
  return graphs;
}

}  // namespace csht

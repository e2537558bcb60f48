#pragma once

#include "csht/panel.hpp"
#include "csht/types.hpp"

#include <set>
#include <string>
#include <utility>
#include <vector>

namespace csht {

/// Least-squares fit of a target series on an intercept plus lagged
/// predictor columns. Rows start at maxLag so nested fits share observations.
struct OlsFit {
  std::string target;
  std::vector<LaggedNode> predictors;
  Vector coefficients;  // intercept first, then predictors in order
  double rss = 0.0;
  int n_obs = 0;
  int max_lag = 0;
};

struct GrangerTestResult {
  std::string target;
  std::vector<LaggedNode> source_group;
  double f_statistic = 0.0;
  double p_value = 1.0;
  double rss_restricted = 0.0;
  double rss_full = 0.0;
  int dof_num = 0;
  int dof_den = 0;
};

/// Parent set -> target, with the joint F-test of the whole parent set
/// against the target's own-lag baseline.
struct Hyperedge {
  std::string target;
  std::vector<LaggedNode> parents;
  GrangerTestResult joint;
};

struct CausalHypergraph {
  std::vector<LaggedNode> nodes;
  std::vector<Hyperedge> edges;
  std::string window_begin, window_end;  // first/last date the graph was fitted on
  int num_tests = 0;
  std::vector<GrangerTestResult> tests;  // full per-source table

  /// (source key "mod:id", target id) pairs, one per parent series.
  std::set<std::pair<std::string, std::string>> source_target_pairs() const;
  const Hyperedge* edge_for(const std::string& target) const;
};

struct DiscoveryConfig {
  int max_lag = 5;
  double alpha = 0.01;
  /// Candidate sources kept per target after the lag-correlation screen;
  /// 0 tests every candidate.
  int max_candidates = 32;
};

OlsFit fit_lagged_ols(const SeriesPanel& panel, const std::string& target_id,
                      const std::vector<LaggedNode>& predictors, int max_lag);

/// F = ((rssR - rssF)/q) / (rssF/(n - k)); p from the F(q, n-k) upper tail.
GrangerTestResult granger_f_test(const OlsFit& restricted, const OlsFit& full);

/// Benjamini-Hochberg step-up rule; returns accepted original indices in
/// ascending order. Ties sort by original index.
std::vector<int> bh_fdr(const std::vector<double>& p_values, double alpha);

/// Tests every (candidate source, target return series) lag block, controls
/// FDR globally, and unions surviving sources into one hyperedge per target.
CausalHypergraph build_hypergraph(const SeriesPanel& panel, const DiscoveryConfig& cfg);

/// One hypergraph per window position [start, start + windowLength), start
/// advancing by stride while the window fits.
std::vector<CausalHypergraph> sliding_window_update(const SeriesPanel& panel,
                                                    int window_length, int stride,
                                                    const DiscoveryConfig& cfg);

}  // namespace csht

#pragma once

#include "csht/panel.hpp"
#include "csht/types.hpp"

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace csht {

/// One planted lagged dependency: series[src] at lag `lag` drives series[tgt].
struct PlantedEdge {
  int src = 0;
  int lag = 1;
  int tgt = 0;
  double coeff = 0.0;
};

struct RegimeShift {
  int break_day = 0;
  std::vector<PlantedEdge> edges_after;
};

/// Seeded VAR process with planted causal structure. Coefficients must keep
/// the companion matrix spectral radius below 1 and planted edges must sit
/// above the detectability floor.
struct PlantedSpec {
  std::vector<SeriesInfo> series;
  int max_lag = 5;
  std::vector<PlantedEdge> edges;
  Vector noise_stdev;  // per series; defaults to all-ones when empty
  int length = 0;
  uint64_t seed = 0;
  std::optional<RegimeShift> shift;
  std::string start_date = "2018-01-02";

  static constexpr double kDetectabilityFloor = 0.05;
  static constexpr double kStabilityTol = 1e-8;

  int num_series() const { return static_cast<int>(series.size()); }
  void validate() const;
};

struct GroundTruthEdge {
  LaggedNode source;
  std::string target;  // series id on the receiving end
  double coeff = 0.0;
  int from_day = 0;  // edge active on panel rows [from_day, to_day)
  int to_day = 0;
};

struct GroundTruthGraph {
  std::vector<GroundTruthEdge> edges;

  /// (source key "mod:id", target id) pairs active throughout [fromDay, toDay).
  std::set<std::pair<std::string, std::string>> active_pairs(int from_day,
                                                             int to_day) const;
};

/// Spectral radius of the VAR companion matrix, estimated by power iteration
/// with geometric growth-rate averaging.
double companion_spectral_radius(const std::vector<Matrix>& lag_matrices,
                                 double tol = PlantedSpec::kStabilityTol);

/// Simulates the process. Identical specs (seed included) generate
/// bit-identical panels; the returned graph mirrors the planted edges.
std::pair<SeriesPanel, GroundTruthGraph> gen_var_process(const PlantedSpec& spec);

/// Copies the spec with piecewise coefficients: `edges` before breakDay,
/// `edgesAfter` from breakDay on. Both regimes must be stable.
PlantedSpec plant_regime_shift(const PlantedSpec& spec, int break_day,
                               std::vector<PlantedEdge> edges_after);

/// Convenience builder: `assets` return series (targets) + one sentiment
/// series per asset + news series for the first newsAssets assets +
/// optionally a market index series.
PlantedSpec make_asset_spec(int assets, int news_assets, bool with_index,
                            int length, uint64_t seed);

/// Index of the series named (modality, id) in the spec, or -1.
int find_series(const std::vector<SeriesInfo>& series, Modality m,
                const std::string& id);

}  // namespace csht

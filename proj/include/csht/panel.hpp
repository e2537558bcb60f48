#pragma once

#include "csht/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace csht {

/// Time-aligned per-asset feature matrices over a trading-day calendar.
/// All matrices share the (days x assets) shape; dates strictly increase.
struct AssetPanel {
  std::vector<std::string> dates;
  std::vector<std::string> assets;
  Matrix ret;         // simple or log returns, per config
  Matrix volatility;  // rolling sample stdev of returns
  Matrix volume;
  Matrix sentiment;   // scores in [-1, 1] before normalization
  Matrix news;        // optional scalar news columns, (days x newsAssets)
  std::vector<std::string> news_assets;
  Vector index_return;  // empty when no market index was ingested

  int days() const { return static_cast<int>(dates.size()); }
  int num_assets() const { return static_cast<int>(assets.size()); }
  bool has_news() const { return news.cols() > 0; }
  bool has_index() const { return index_return.size() > 0; }

  void validate() const;
  AssetPanel slice_rows(int begin, int end) const;
};

/// Flat view used by discovery and the model: one column per named series.
struct SeriesInfo {
  Modality modality = Modality::Return;
  std::string id;
  bool is_target = false;  // asset return series are prediction targets
};

struct SeriesPanel {
  std::vector<std::string> dates;
  std::vector<SeriesInfo> series;
  Matrix values;  // days x series

  int days() const { return static_cast<int>(dates.size()); }
  int num_series() const { return static_cast<int>(series.size()); }
  int find(Modality m, const std::string& id) const;
  std::vector<int> target_indices() const;
  std::string series_key(int col) const {
    return std::string(modality_name(series[col].modality)) + ":" + series[col].id;
  }
  SeriesPanel slice_rows(int begin, int end) const;
  /// Row range [first, last) whose dates fall inside [startIso, endIso).
  std::pair<int, int> date_range(const std::string& start_iso,
                                 const std::string& end_iso) const;
};

/// Per-column mean/stdev computed on the training split only.
/// stdev uses the n-1 denominator; stdev == 0 marks a degenerate column.
struct NormStats {
  std::vector<std::string> keys;
  Vector mean;
  Vector stdev;
  std::vector<uint8_t> degenerate;

  int find(const std::string& key) const;
};

/// Half-open, chronologically ordered date intervals.
struct TimeSplit {
  std::string train_begin, train_end;
  std::string valid_begin, valid_end;
  std::string test_begin, test_end;

  void validate() const;
};

struct SplitPanels {
  AssetPanel train, valid, test;
};

/// R_t = (P_t - P_{t-1}) / P_{t-1}, or log(P_t / P_{t-1}) when logReturns.
/// Output has one row fewer than the input. Throws on non-positive prices,
/// naming the offending asset and date.
Matrix compute_returns(const Matrix& prices, const std::vector<std::string>& dates,
                       const std::vector<std::string>& assets, bool log_returns = false);

/// Rolling sample standard deviation over `window` trailing returns.
/// Output row t covers input rows [t, t+window); rows before the first full
/// window are excluded from the output entirely.
Matrix realized_volatility(const Matrix& returns, int window = 30);

NormStats compute_column_stats(const Matrix& values, const std::vector<std::string>& keys);
void apply_znorm(Matrix& values, const std::vector<std::string>& keys, const NormStats& stats);
void apply_denorm(Matrix& values, const std::vector<std::string>& keys, const NormStats& stats);

/// Stats over the panel rows [rowBegin, rowEnd) - the training range.
NormStats compute_norm_stats(const AssetPanel& panel, int row_begin, int row_end);
AssetPanel znormalize(const AssetPanel& panel, const NormStats& stats);
AssetPanel denormalize(const AssetPanel& panel, const NormStats& stats);

/// Binary bull/bear labels: label[t] = 1 iff the index return summed over
/// (t, t+horizon] is strictly positive. The last `horizon` entries carry -1
/// (unlabeled).
IntVector regime_label(const Vector& index_returns, int horizon = 3);

SplitPanels temporal_split(const AssetPanel& panel, const TimeSplit& split);

/// Lagged-variable view: asset returns (targets) plus sentiment, news and the
/// index as candidate sources.
SeriesPanel to_series_panel(const AssetPanel& panel);

/// Assembles an AssetPanel from raw tables. Prices define the calendar;
/// sentiment/news cells missing for a date get the neutral score 0; assets
/// with price or volume gaps are dropped. Returns lose one day and the
/// volatility window trims `volWindow - 1` more.
struct RawTable {
  std::vector<std::string> dates;
  std::vector<std::string> columns;
  Matrix values;
};

AssetPanel build_asset_panel(const RawTable& prices,
                             const std::optional<RawTable>& sentiment,
                             const std::optional<RawTable>& volume,
                             const std::optional<RawTable>& news,
                             const std::optional<RawTable>& index_prices,
                             int vol_window = 30, bool log_returns = false);

}  // namespace csht

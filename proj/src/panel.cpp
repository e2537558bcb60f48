#include "csht/panel.hpp"

#include "csht/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <stdexcept>

namespace csht {

Modality parse_modality(const std::string& s) {
  if (s == "ret") return Modality::Return;
  if (s == "sent") return Modality::Sentiment;
  if (s == "news") return Modality::News;
  throw std::invalid_argument("types: unknown modality '" + s + "'");
}

LaggedNode parse_lagged_node(const std::string& text) {
  const auto a = text.find(':');
  const auto b = text.rfind(':');
  if (a == std::string::npos || b == a)
    throw std::invalid_argument("types: bad node '" + text + "'");
  LaggedNode n;
  n.modality = parse_modality(text.substr(0, a));
  n.series = text.substr(a + 1, b - a - 1);
  n.lag = std::stoi(text.substr(b + 1));
  return n;
}

void AssetPanel::validate() const {
  const auto d = static_cast<Eigen::Index>(dates.size());
  const auto a = static_cast<Eigen::Index>(assets.size());
  auto check_shape = [&](const Matrix& m, const char* name) {
    if (m.rows() != d || m.cols() != a)
      throw std::runtime_error(std::string("panel: feature '") + name +
                               "' shape mismatch");
  };
  check_shape(ret, "return");
  check_shape(volatility, "volatility");
  check_shape(volume, "volume");
  check_shape(sentiment, "sentiment");
  if (has_news() &&
      (news.rows() != d || news.cols() != static_cast<Eigen::Index>(news_assets.size())))
    throw std::runtime_error("panel: news shape mismatch");
  if (has_index() && index_return.size() != d)
    throw std::runtime_error("panel: index length mismatch");
  for (size_t i = 1; i < dates.size(); ++i)
    if (!(dates[i - 1] < dates[i]))
      throw std::runtime_error("panel: dates not strictly increasing at " + dates[i]);
  auto check_finite = [&](const Matrix& m, const char* name) {
    if (!m.allFinite())
      throw std::runtime_error(std::string("panel: missing values in '") + name + "'");
  };
  check_finite(ret, "return");
  check_finite(volatility, "volatility");
  check_finite(volume, "volume");
  check_finite(sentiment, "sentiment");
  if (has_news()) check_finite(news, "news");
}

AssetPanel AssetPanel::slice_rows(int begin, int end) const {
  if (begin < 0 || end > days() || begin > end)
    throw std::out_of_range("panel: bad row slice");
  AssetPanel out;
  out.dates.assign(dates.begin() + begin, dates.begin() + end);
  out.assets = assets;
  const int n = end - begin;
  out.ret = ret.middleRows(begin, n);
  out.volatility = volatility.middleRows(begin, n);
  out.volume = volume.middleRows(begin, n);
  out.sentiment = sentiment.middleRows(begin, n);
  out.news_assets = news_assets;
  if (has_news()) out.news = news.middleRows(begin, n);
  if (has_index()) out.index_return = index_return.segment(begin, n);
  return out;
}

int SeriesPanel::find(Modality m, const std::string& id) const {
  for (int i = 0; i < num_series(); ++i)
    if (series[i].modality == m && series[i].id == id) return i;
  return -1;
}

std::vector<int> SeriesPanel::target_indices() const {
  std::vector<int> out;
  for (int i = 0; i < num_series(); ++i)
    if (series[i].is_target) out.push_back(i);
  return out;
}

SeriesPanel SeriesPanel::slice_rows(int begin, int end) const {
  if (begin < 0 || end > days() || begin > end)
    throw std::out_of_range("panel: bad row slice");
  SeriesPanel out;
  out.dates.assign(dates.begin() + begin, dates.begin() + end);
  out.series = series;
  out.values = values.middleRows(begin, end - begin);
  return out;
}

std::pair<int, int> SeriesPanel::date_range(const std::string& start_iso,
                                            const std::string& end_iso) const {
  const auto lo = std::lower_bound(dates.begin(), dates.end(), start_iso);
  const auto hi = std::lower_bound(dates.begin(), dates.end(), end_iso);
  return {static_cast<int>(lo - dates.begin()), static_cast<int>(hi - dates.begin())};
}

int NormStats::find(const std::string& key) const {
  for (size_t i = 0; i < keys.size(); ++i)
    if (keys[i] == key) return static_cast<int>(i);
  return -1;
}

void TimeSplit::validate() const {
  auto ordered = [](const std::string& a, const std::string& b) { return a < b; };
  if (!ordered(train_begin, train_end) || !ordered(valid_begin, valid_end) ||
      !ordered(test_begin, test_end))
    throw std::invalid_argument("panel: split interval empty or reversed");
  if (train_end > valid_begin || valid_end > test_begin)
    throw std::invalid_argument("panel: split intervals overlap or are out of order");
}

Matrix compute_returns(const Matrix& prices, const std::vector<std::string>& dates,
                       const std::vector<std::string>& assets, bool log_returns) {
  if (prices.rows() < 2) throw std::invalid_argument("panel: need at least 2 price rows");
  if (dates.size() != static_cast<size_t>(prices.rows()) ||
      assets.size() != static_cast<size_t>(prices.cols()))
    throw std::invalid_argument("panel: price labels do not match shape");
  for (Eigen::Index t = 0; t < prices.rows(); ++t)
    for (Eigen::Index j = 0; j < prices.cols(); ++j)
      if (!(prices(t, j) > 0))
        throw std::runtime_error("panel: non-positive price for " + assets[j] +
                                 " on " + dates[t]);
  Matrix out(prices.rows() - 1, prices.cols());
  for (Eigen::Index t = 1; t < prices.rows(); ++t) {
    if (log_returns)
      out.row(t - 1) = (prices.row(t).array() / prices.row(t - 1).array()).log();
    else
      out.row(t - 1) =
          (prices.row(t).array() - prices.row(t - 1).array()) / prices.row(t - 1).array();
  }
  return out;
}

Matrix realized_volatility(const Matrix& returns, int window) {
  if (window < 2) throw std::invalid_argument("panel: volatility window must be >= 2");
  if (returns.rows() < window)
    throw std::invalid_argument("panel: series shorter than volatility window");
  const Eigen::Index n = returns.rows() - window + 1;
  Matrix out(n, returns.cols());
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < returns.cols(); ++j) {
      const auto seg = returns.col(j).segment(t, window);
      const double m = seg.mean();
      out(t, j) = std::sqrt((seg.array() - m).square().sum() / (window - 1));
    }
  }
  return out;
}

NormStats compute_column_stats(const Matrix& values, const std::vector<std::string>& keys) {
  if (keys.size() != static_cast<size_t>(values.cols()))
    throw std::invalid_argument("panel: stats keys do not match columns");
  if (values.rows() < 1) throw std::invalid_argument("panel: stats over empty range");
  NormStats s;
  s.keys = keys;
  s.mean.resize(values.cols());
  s.stdev.resize(values.cols());
  s.degenerate.assign(keys.size(), 0);
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const auto col = values.col(j);
    s.mean(j) = col.mean();
    const double var =
        values.rows() < 2 ? 0.0
                          : (col.array() - s.mean(j)).square().sum() / (values.rows() - 1);
    s.stdev(j) = std::sqrt(var);
    if (s.stdev(j) <= 0) s.degenerate[j] = 1;
  }
  return s;
}

namespace {

void transform_columns(Matrix& values, const std::vector<std::string>& keys,
                       const NormStats& stats, bool forward) {
  if (keys.size() != static_cast<size_t>(values.cols()))
    throw std::invalid_argument("panel: keys do not match columns");
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const int k = stats.find(keys[j]);
    if (k < 0) throw std::runtime_error("panel: no stats for column '" + keys[j] + "'");
    if (stats.degenerate[k]) {
      if (forward) values.col(j).setZero();
      // degenerate columns stay zero on the way back; the constant is lost
      else values.col(j).setConstant(stats.mean(k));
      continue;
    }
    if (forward)
      values.col(j) = (values.col(j).array() - stats.mean(k)) / stats.stdev(k);
    else
      values.col(j) = values.col(j).array() * stats.stdev(k) + stats.mean(k);
  }
}

std::vector<std::string> panel_keys(const AssetPanel& p, const char* prefix,
                                    const std::vector<std::string>& names) {
  std::vector<std::string> keys;
  keys.reserve(names.size());
  for (const auto& a : names) keys.push_back(std::string(prefix) + ":" + a);
  (void)p;
  return keys;
}

}  // namespace

void apply_znorm(Matrix& values, const std::vector<std::string>& keys, const NormStats& stats) {
  transform_columns(values, keys, stats, true);
}

void apply_denorm(Matrix& values, const std::vector<std::string>& keys, const NormStats& stats) {
  transform_columns(values, keys, stats, false);
}

NormStats compute_norm_stats(const AssetPanel& panel, int row_begin, int row_end) {
  if (row_begin < 0 || row_end > panel.days() || row_begin >= row_end)
    throw std::invalid_argument("panel: bad stats row range");
  std::vector<std::string> keys;
  std::vector<const Matrix*> mats = {&panel.ret, &panel.volatility, &panel.volume,
                                     &panel.sentiment};
  std::vector<const char*> prefixes = {"ret", "vol30", "volume", "sent"};
  Eigen::Index total = 0;
  for (const auto* m : mats) total += m->cols();
  if (panel.has_news()) total += panel.news.cols();
  if (panel.has_index()) total += 1;
  Matrix block(row_end - row_begin, total);
  Eigen::Index at = 0;
  for (size_t i = 0; i < mats.size(); ++i) {
    for (const auto& k : panel_keys(panel, prefixes[i], panel.assets)) keys.push_back(k);
    block.middleCols(at, mats[i]->cols()) =
        mats[i]->middleRows(row_begin, row_end - row_begin);
    at += mats[i]->cols();
  }
  if (panel.has_news()) {
    for (const auto& k : panel_keys(panel, "news", panel.news_assets)) keys.push_back(k);
    block.middleCols(at, panel.news.cols()) =
        panel.news.middleRows(row_begin, row_end - row_begin);
    at += panel.news.cols();
  }
  if (panel.has_index()) {
    keys.push_back("ret:INDEX");
    block.col(at) = panel.index_return.segment(row_begin, row_end - row_begin);
  }
  NormStats stats = compute_column_stats(block, keys);
  for (size_t i = 0; i < stats.keys.size(); ++i)
    if (stats.degenerate[i])
      std::cerr << "panel: warning: degenerate column '" << stats.keys[i]
                << "' (zero stdev)\n";
  return stats;
}

namespace {

AssetPanel transform_panel(const AssetPanel& panel, const NormStats& stats, bool forward) {
  AssetPanel out = panel;
  auto go = [&](Matrix& m, const char* prefix, const std::vector<std::string>& names) {
    auto keys = panel_keys(panel, prefix, names);
    forward ? apply_znorm(m, keys, stats) : apply_denorm(m, keys, stats);
  };
  go(out.ret, "ret", panel.assets);
  go(out.volatility, "vol30", panel.assets);
  go(out.volume, "volume", panel.assets);
  go(out.sentiment, "sent", panel.assets);
  if (panel.has_news()) go(out.news, "news", panel.news_assets);
  if (panel.has_index()) {
    Matrix idx = panel.index_return;
    std::vector<std::string> k = {"ret:INDEX"};
    forward ? apply_znorm(idx, k, stats) : apply_denorm(idx, k, stats);
    out.index_return = idx.col(0);
  }
  return out;
}

}  // namespace

AssetPanel znormalize(const AssetPanel& panel, const NormStats& stats) {
  return transform_panel(panel, stats, true);
}

AssetPanel denormalize(const AssetPanel& panel, const NormStats& stats) {
  return transform_panel(panel, stats, false);
}

IntVector regime_label(const Vector& index_returns, int horizon) {
  if (horizon < 1) throw std::invalid_argument("panel: regime horizon must be >= 1");
  const Eigen::Index n = index_returns.size();
  IntVector labels = IntVector::Constant(n, -1);
  for (Eigen::Index t = 0; t + horizon < n; ++t) {
    const double fwd = index_returns.segment(t + 1, horizon).sum();
    labels(t) = fwd > 0 ? 1 : 0;
  }
  return labels;
}

SplitPanels temporal_split(const AssetPanel& panel, const TimeSplit& split) {
  split.validate();
  auto range = [&](const std::string& a, const std::string& b) {
    const auto lo = std::lower_bound(panel.dates.begin(), panel.dates.end(), a);
    const auto hi = std::lower_bound(panel.dates.begin(), panel.dates.end(), b);
    return std::pair<int, int>(static_cast<int>(lo - panel.dates.begin()),
                               static_cast<int>(hi - panel.dates.begin()));
  };
  const auto tr = range(split.train_begin, split.train_end);
  const auto va = range(split.valid_begin, split.valid_end);
  const auto te = range(split.test_begin, split.test_end);
  for (const auto& r : {tr, va, te})
    if (r.first >= r.second) throw std::runtime_error("panel: empty split range");
  SplitPanels out;
  out.train = panel.slice_rows(tr.first, tr.second);
  out.valid = panel.slice_rows(va.first, va.second);
  out.test = panel.slice_rows(te.first, te.second);
  return out;
}

SeriesPanel to_series_panel(const AssetPanel& panel) {
  panel.validate();
  SeriesPanel sp;
  sp.dates = panel.dates;
  const int days = panel.days();
  const int cols = panel.num_assets() * 2 + static_cast<int>(panel.news_assets.size()) +
                   (panel.has_index() ? 1 : 0);
  sp.values.resize(days, cols);
  int at = 0;
  for (int j = 0; j < panel.num_assets(); ++j, ++at) {
    sp.series.push_back({Modality::Return, panel.assets[j], true});
    sp.values.col(at) = panel.ret.col(j);
  }
  for (int j = 0; j < panel.num_assets(); ++j, ++at) {
    sp.series.push_back({Modality::Sentiment, panel.assets[j], false});
    sp.values.col(at) = panel.sentiment.col(j);
  }
  for (size_t j = 0; j < panel.news_assets.size(); ++j, ++at) {
    sp.series.push_back({Modality::News, panel.news_assets[j], false});
    sp.values.col(at) = panel.news.col(static_cast<Eigen::Index>(j));
  }
  if (panel.has_index()) {
    sp.series.push_back({Modality::Return, "INDEX", false});
    sp.values.col(at) = panel.index_return;
  }
  return sp;
}

AssetPanel build_asset_panel(const RawTable& prices,
                             const std::optional<RawTable>& sentiment,
                             const std::optional<RawTable>& volume,
                             const std::optional<RawTable>& news,
                             const std::optional<RawTable>& index_prices,
                             int vol_window, bool log_returns) {
  if (prices.dates.size() < static_cast<size_t>(vol_window + 2))
    throw std::invalid_argument("panel: too few price rows for the volatility window");

  // Prices define the calendar. Assets with any non-finite price or volume
  // cell are dropped; sentiment and news gaps read as the neutral score 0.
  auto lookup = [](const RawTable& t, const std::string& date, int col) -> double {
    const auto it = std::lower_bound(t.dates.begin(), t.dates.end(), date);
    if (it == t.dates.end() || *it != date)
      return std::numeric_limits<double>::quiet_NaN();
    return t.values(static_cast<Eigen::Index>(it - t.dates.begin()), col);
  };

  std::vector<int> kept;
  for (size_t j = 0; j < prices.columns.size(); ++j) {
    bool ok = prices.values.col(static_cast<Eigen::Index>(j)).allFinite();
    if (ok && volume) {
      // volume only matters on the trimmed panel days
      const auto& v = *volume;
      const auto vit = std::find(v.columns.begin(), v.columns.end(), prices.columns[j]);
      if (vit == v.columns.end()) {
        ok = false;
      } else {
        const int vc = static_cast<int>(vit - v.columns.begin());
        for (size_t d = static_cast<size_t>(vol_window); d < prices.dates.size(); ++d)
          if (!std::isfinite(lookup(v, prices.dates[d], vc))) { ok = false; break; }
      }
    }
    if (!ok)
      std::cerr << "panel: dropping asset '" << prices.columns[j]
                << "' (incomplete history)\n";
    else
      kept.push_back(static_cast<int>(j));
  }
  if (kept.empty()) throw std::runtime_error("panel: no asset with complete history");

  const int tp = static_cast<int>(prices.dates.size());
  const int na = static_cast<int>(kept.size());
  Matrix px(tp, na);
  std::vector<std::string> assets;
  for (int j = 0; j < na; ++j) {
    px.col(j) = prices.values.col(kept[j]);
    assets.push_back(prices.columns[kept[j]]);
  }

  const Matrix rets = compute_returns(px, prices.dates, assets, log_returns);
  const Matrix vol = realized_volatility(rets, vol_window);

  // Panel day k corresponds to price day k + volWindow, so every feature at
  // day k only uses data at or before that day.
  const int days = tp - vol_window;
  AssetPanel p;
  p.assets = assets;
  p.dates.assign(prices.dates.begin() + vol_window, prices.dates.end());
  p.ret = rets.bottomRows(days);
  p.volatility = vol.bottomRows(days);
  p.volume.resize(days, na);
  p.sentiment.resize(days, na);
  for (int k = 0; k < days; ++k) {
    const std::string& d = p.dates[k];
    for (int j = 0; j < na; ++j) {
      double vv = 0.0;
      if (volume) {
        const auto vit = std::find(volume->columns.begin(), volume->columns.end(), assets[j]);
        vv = lookup(*volume, d, static_cast<int>(vit - volume->columns.begin()));
      }
      p.volume(k, j) = vv;
      double sv = 0.0;
      if (sentiment) {
        const auto sit = std::find(sentiment->columns.begin(), sentiment->columns.end(), assets[j]);
        if (sit != sentiment->columns.end()) {
          sv = lookup(*sentiment, d, static_cast<int>(sit - sentiment->columns.begin()));
          if (!std::isfinite(sv)) sv = 0.0;
        }
      }
      p.sentiment(k, j) = sv;
    }
  }
  if (news) {
    p.news_assets = news->columns;
    p.news.resize(days, static_cast<Eigen::Index>(news->columns.size()));
    for (int k = 0; k < days; ++k)
      for (size_t j = 0; j < news->columns.size(); ++j) {
        double nv = lookup(*news, p.dates[k], static_cast<int>(j));
        p.news(k, static_cast<Eigen::Index>(j)) = std::isfinite(nv) ? nv : 0.0;
      }
  }
  if (index_prices) {
    if (index_prices->columns.size() != 1)
      throw std::invalid_argument("panel: index file must have exactly one column");
    Matrix ipx(tp, 1);
    for (int k = 0; k < tp; ++k) {
      const double v = lookup(*index_prices, prices.dates[k], 0);
      if (!std::isfinite(v))
        throw std::runtime_error("panel: index price missing on " + prices.dates[k]);
      ipx(k, 0) = v;
    }
    const Matrix ir = compute_returns(ipx, prices.dates, {"INDEX"}, log_returns);
    p.index_return = ir.col(0).tail(days);
  }
  p.validate();
  return p;
}

}  // namespace csht

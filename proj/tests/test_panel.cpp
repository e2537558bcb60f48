#include "csht/panel.hpp"

#include "csht/calendar.hpp"
#include "csht/io.hpp"

#include <doctest.h>

#include <cmath>

using namespace csht;

namespace {

AssetPanel tiny_panel(int days, int assets, bool with_index = true) {
  AssetPanel p;
  p.dates = trading_days_from("2018-01-02", days);
  for (int j = 0; j < assets; ++j) p.assets.push_back("A" + std::to_string(j));
  auto fill = [&](double base) {
    Matrix m(days, assets);
    for (int t = 0; t < days; ++t)
      for (int j = 0; j < assets; ++j) m(t, j) = base + 0.01 * t + 0.1 * j;
    return m;
  };
  p.ret = fill(0.0);
  p.volatility = fill(1.0);
  p.volume = fill(2.0);
  p.sentiment = fill(-0.5);
  if (with_index) {
    p.index_return.resize(days);
    for (int t = 0; t < days; ++t) p.index_return(t) = 0.001 * ((t % 3) - 1);
  }
  return p;
}

}  // namespace

TEST_CASE("compute_returns evaluates the simple-return formula") {
  Matrix prices(3, 1);
  prices << 100, 110, 99;
  const auto dates = trading_days_from("2018-01-02", 3);
  Matrix r = compute_returns(prices, dates, {"A"});
  CHECK(r.rows() == 2);
  CHECK(r(0, 0) == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(r(1, 0) == doctest::Approx(-0.10).epsilon(1e-12));

  Matrix flat(3, 1);
  flat << 50, 50, 50;
  Matrix rf = compute_returns(flat, dates, {"A"});
  CHECK(rf(0, 0) == 0.0);
  CHECK(rf(1, 0) == 0.0);

  Matrix bad(2, 1);
  bad << 100, 0;
  CHECK_THROWS_WITH_AS(compute_returns(bad, trading_days_from("2018-01-02", 2), {"A"}),
                       doctest::Contains("non-positive price"), std::runtime_error);
}

TEST_CASE("compute_returns log flag and price reconstruction") {
  Matrix prices(4, 2);
  prices << 100, 20, 105, 22, 102, 21, 108, 25;
  const auto dates = trading_days_from("2018-01-02", 4);
  Matrix r = compute_returns(prices, dates, {"A", "B"});
  // composing the returns back onto P_0 reconstructs the prices
  for (int j = 0; j < 2; ++j) {
    double p = prices(0, j);
    for (int t = 0; t < r.rows(); ++t) {
      p *= 1.0 + r(t, j);
      CHECK(std::fabs(p - prices(t + 1, j)) / prices(t + 1, j) < 1e-9);
    }
  }
  Matrix lr = compute_returns(prices, dates, {"A", "B"}, true);
  CHECK(lr(0, 0) == doctest::Approx(std::log(105.0 / 100.0)).epsilon(1e-14));
}

TEST_CASE("realized_volatility windows") {
  // constant returns -> zero volatility
  Matrix constant = Matrix::Constant(10, 1, 0.02);
  Matrix v = realized_volatility(constant, 5);
  CHECK(v.rows() == 6);
  CHECK(v.maxCoeff() == doctest::Approx(0.0));

  // alternating +v/-v with window 2: sample stdev = |v| * sqrt(2)
  Matrix alt(6, 1);
  for (int t = 0; t < 6; ++t) alt(t, 0) = (t % 2 == 0 ? 0.03 : -0.03);
  Matrix va = realized_volatility(alt, 2);
  for (int t = 0; t < va.rows(); ++t)
    CHECK(va(t, 0) == doctest::Approx(0.03 * std::sqrt(2.0)).epsilon(1e-12));

  CHECK_THROWS(realized_volatility(Matrix::Zero(3, 1), 4));
  CHECK_THROWS(realized_volatility(Matrix::Zero(10, 1), 1));
}

TEST_CASE("znormalize basics, degenerate flag, round trip") {
  Matrix col(3, 2);
  col << 1, 7, 2, 7, 3, 7;
  NormStats s = compute_column_stats(col, {"a", "b"});
  CHECK(s.mean(0) == doctest::Approx(2.0));
  CHECK(s.stdev(0) == doctest::Approx(1.0));
  CHECK(s.degenerate[0] == 0);
  CHECK(s.degenerate[1] == 1);

  Matrix z = col;
  apply_znorm(z, {"a", "b"}, s);
  CHECK(z(0, 0) == doctest::Approx(-1.0));
  CHECK(z(1, 0) == doctest::Approx(0.0));
  CHECK(z(2, 0) == doctest::Approx(1.0));
  CHECK(z.col(1).isZero());  // degenerate becomes all-zero

  Matrix back = z;
  apply_denorm(back, {"a", "b"}, s);
  CHECK((back.col(0) - col.col(0)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("panel znormalize leaves training range standardized") {
  AssetPanel p = tiny_panel(40, 3);
  NormStats stats = compute_norm_stats(p, 0, 25);
  AssetPanel z = znormalize(p, stats);
  // per-feature mean ~ 0, stdev ~ 1 on the training range itself
  for (int j = 0; j < 3; ++j) {
    const auto seg = z.ret.col(j).head(25);
    CHECK(std::fabs(seg.mean()) < 1e-9);
    const double sd = std::sqrt((seg.array() - seg.mean()).square().sum() / 24.0);
    CHECK(std::fabs(sd - 1.0) < 1e-9);
  }
  AssetPanel back = denormalize(z, stats);
  CHECK((back.ret - p.ret).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((back.sentiment - p.sentiment).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("regime labels from forward index returns") {
  Vector idx(4);
  idx << 0.5, 0.01, 0.02, -0.005;  // forward window of day 0 sums to +0.025
  IntVector lab = regime_label(idx, 3);
  CHECK(lab(0) == 1);
  CHECK(lab(1) == -1);  // unlabeled tail
  CHECK(lab(3) == -1);

  Vector neg(4);
  neg << 0.5, -0.01, 0.0, 0.0;
  CHECK(regime_label(neg, 3)(0) == 0);

  Vector tie(4);
  tie << 0.5, 0.01, -0.01, 0.0;  // forward sum exactly zero -> bear
  CHECK(regime_label(tie, 3)(0) == 0);
}

TEST_CASE("temporal split by date ranges") {
  AssetPanel p = tiny_panel(100, 2);
  TimeSplit split;
  split.train_begin = p.dates[0];
  split.train_end = p.dates[60];
  split.valid_begin = p.dates[60];
  split.valid_end = p.dates[80];
  split.test_begin = p.dates[80];
  split.test_end = days_to_iso(iso_to_days(p.dates[99]) + 1);
  SplitPanels sp = temporal_split(p, split);
  CHECK(sp.train.days() == 60);
  CHECK(sp.valid.days() == 20);
  CHECK(sp.test.days() == 20);
  CHECK(sp.train.num_assets() == 2);

  // split covering everything as train leaves valid empty
  TimeSplit bad = split;
  bad.valid_begin = bad.valid_end = split.test_end;
  CHECK_THROWS(temporal_split(p, bad));
}

TEST_CASE("table-style split counts on the trading calendar") {
  AssetPanel p = tiny_panel(1, 1);
  p.dates = trading_days("2018-01-01", "2023-06-30");
  const int days = static_cast<int>(p.dates.size());
  p.ret = Matrix::Random(days, 1);
  p.volatility = Matrix::Random(days, 1).cwiseAbs();
  p.volume = Matrix::Random(days, 1).cwiseAbs();
  p.sentiment = Matrix::Random(days, 1);
  p.index_return = Vector::Random(days);
  TimeSplit split;
  split.train_begin = "2018-01-01";
  split.train_end = "2021-01-01";
  split.valid_begin = "2021-01-01";
  split.valid_end = "2022-01-01";
  split.test_begin = "2022-01-01";
  split.test_end = "2023-07-01";
  SplitPanels sp = temporal_split(p, split);
  CHECK(sp.train.days() == 756);
  CHECK(sp.valid.days() == 252);
  CHECK(sp.test.days() == 376);
}

TEST_CASE("series panel view covers assets, sentiment, news, index") {
  AssetPanel p = tiny_panel(30, 2);
  p.news_assets = {"A0"};
  p.news = Matrix::Constant(30, 1, 0.25);
  SeriesPanel sp = to_series_panel(p);
  CHECK(sp.num_series() == 2 + 2 + 1 + 1);
  CHECK(sp.target_indices() == std::vector<int>{0, 1});
  CHECK(sp.find(Modality::News, "A0") == 4);
  CHECK(sp.find(Modality::Return, "INDEX") == 5);
  CHECK(sp.series_key(2) == "sent:A0");
  CHECK(sp.values(0, 5) == doctest::Approx(p.index_return(0)));
}

TEST_CASE("build_asset_panel aligns, drops gappy assets, zero-fills sentiment") {
  const int vol_window = 5;
  const auto dates = trading_days_from("2018-01-02", 12);
  RawTable prices;
  prices.dates = dates;
  prices.columns = {"A", "B"};
  prices.values.resize(12, 2);
  for (int t = 0; t < 12; ++t) {
    prices.values(t, 0) = 100 + t;
    prices.values(t, 1) = (t == 4) ? std::numeric_limits<double>::quiet_NaN() : 50.0 + t;
  }
  RawTable sent;
  sent.dates = {dates[7]};
  sent.columns = {"A"};
  sent.values = Matrix::Constant(1, 1, 0.9);

  AssetPanel p = build_asset_panel(prices, sent, std::nullopt, std::nullopt,
                                   std::nullopt, vol_window);
  CHECK(p.assets == std::vector<std::string>{"A"});  // B dropped for the gap
  CHECK(p.days() == 12 - vol_window);
  CHECK(p.dates.front() == dates[vol_window]);
  // day alignment: return at panel day 0 is the price move into that date
  CHECK(p.ret(0, 0) ==
        doctest::Approx((105.0 - 104.0) / 104.0).epsilon(1e-12));
  CHECK(p.sentiment(7 - vol_window, 0) == doctest::Approx(0.9));
  CHECK(p.sentiment(0, 0) == 0.0);  // unmatched dates carry the neutral score
  p.validate();
}

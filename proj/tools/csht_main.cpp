// csht: Granger-causal hypergraph discovery + spherical causal-attention
// forecasting over daily panels. Subcommands chain through the filesystem:
// `generate` emits feature CSVs, `discover` fits hypergraphs, `train` fits
// the model, `evaluate` runs the seeded protocol, `predict` reports
// forecasts and attention paths for one day.

#include "csht/calendar.hpp"
#include "csht/evaluation.hpp"
#include "csht/granger.hpp"
#include "csht/io.hpp"
#include "csht/model.hpp"
#include "csht/panel.hpp"
#include "csht/synthetic.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace csht;

namespace {

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  std::string task;
  bool no_causal_mask = false;
  bool no_spherical = false;
  double input_noise = -1.0;
};

struct RunContext {
  KeyValueConfig cfg;
  std::string out_dir;
};

RunContext make_context(const CliOverrides& ov) {
  RunContext ctx;
  ctx.cfg = KeyValueConfig::parse_file(ov.config_path);
  if (!ov.out_dir.empty()) ctx.cfg.set("run.out", ov.out_dir);
  if (ov.seed_set) {
    ctx.cfg.set("run.seed", std::to_string(ov.seed));
    ctx.cfg.set("run.seeds", std::to_string(ov.seed));
  }
  if (!ov.task.empty()) ctx.cfg.set("model.task", ov.task);
  if (ov.no_causal_mask) ctx.cfg.set("model.use_causal_mask", "0");
  if (ov.no_spherical) ctx.cfg.set("model.use_spherical", "0");
  if (ov.input_noise >= 0)
    ctx.cfg.set("model.input_noise", format_double(ov.input_noise));
  ctx.out_dir = ctx.cfg.get_or("run.out", "out");
  fs::create_directories(ctx.out_dir);
  return ctx;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// --- synthetic spec from config ---------------------------------------------

std::vector<PlantedEdge> parse_edges(const std::string& text,
                                     const std::vector<SeriesInfo>& series) {
  // grammar: mod:series:lag>target:coeff, whitespace/comma separated
  std::vector<PlantedEdge> edges;
  for (const auto& item : split_list(text)) {
    const auto gt = item.find('>');
    if (gt == std::string::npos)
      throw std::runtime_error("cli: bad edge '" + item + "' (want src:lag>tgt:coeff)");
    const LaggedNode src = parse_lagged_node(item.substr(0, gt));
    const std::string rest = item.substr(gt + 1);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos)
      throw std::runtime_error("cli: bad edge target '" + rest + "'");
    PlantedEdge e;
    e.src = find_series(series, src.modality, src.series);
    if (e.src < 0) throw std::runtime_error("cli: edge source not in spec: " + item);
    e.lag = src.lag;
    e.tgt = find_series(series, Modality::Return, rest.substr(0, colon));
    if (e.tgt < 0) throw std::runtime_error("cli: edge target not in spec: " + item);
    e.coeff = std::stod(rest.substr(colon + 1));
    edges.push_back(e);
  }
  return edges;
}

PlantedSpec spec_from_config(const KeyValueConfig& cfg, uint64_t seed) {
  PlantedSpec spec = make_asset_spec(
      static_cast<int>(cfg.get_long("synthetic.assets", 3)),
      static_cast<int>(cfg.get_long("synthetic.news_assets", 0)),
      cfg.get_bool("synthetic.index", true),
      static_cast<int>(cfg.get_long("synthetic.length", 600)), seed);
  spec.max_lag = static_cast<int>(cfg.get_long("discovery.max_lag", 5));
  spec.start_date = cfg.get_or("synthetic.start_date", "2018-01-02");
  const double noise = cfg.get_double("synthetic.noise", 1.0);
  spec.noise_stdev = Vector::Constant(spec.num_series(), noise);
  if (cfg.has("synthetic.edges"))
    spec.edges = parse_edges(cfg.get("synthetic.edges"), spec.series);
  const int break_day = static_cast<int>(cfg.get_long("synthetic.break_day", 0));
  if (break_day > 0) {
    if (!cfg.has("synthetic.edges_after"))
      throw std::runtime_error("cli: break_day set without edges_after");
    spec = plant_regime_shift(spec, break_day,
                              parse_edges(cfg.get("synthetic.edges_after"), spec.series));
  }
  return spec;
}

// --- pipeline assembly --------------------------------------------------------

struct Pipeline {
  AssetPanel raw;       // ingested panel, raw units
  AssetPanel zpanel;    // z-normalized with train-range stats
  SeriesPanel series;   // model/discovery view of zpanel
  NormStats stats;
  IntVector labels;     // regime labels from raw index returns (-1 = none)
  Matrix raw_returns;   // days x targets, raw units
  int train_begin = 0, train_end = 0;
  int valid_begin = 0, valid_end = 0;
  int test_begin = 0, test_end = 0;
};

std::string data_file(const KeyValueConfig& cfg, const std::string& out_dir,
                      const std::string& key, const std::string& fallback) {
  if (cfg.has("data." + key)) return cfg.get("data." + key);
  const std::string dir = cfg.get_or("data.dir", out_dir);
  return (fs::path(dir) / fallback).string();
}

AssetPanel load_panel(const KeyValueConfig& cfg, const std::string& out_dir) {
  const int vol_window = static_cast<int>(cfg.get_long("data.vol_window", 30));
  const bool log_returns = cfg.get_bool("data.log_returns", false);
  auto maybe = [&](const std::string& key, const std::string& fallback)
      -> std::optional<RawTable> {
    const std::string path = data_file(cfg, out_dir, key, fallback);
    if (!fs::exists(path)) return std::nullopt;
    return read_feature_csv(path);
  };
  const std::string prices_path = data_file(cfg, out_dir, "prices", "prices.csv");
  if (!fs::exists(prices_path))
    throw std::runtime_error("cli: prices file '" + prices_path + "' not found");
  return build_asset_panel(read_feature_csv(prices_path),
                           maybe("sentiment", "sentiment.csv"),
                           maybe("volume", "volume.csv"), maybe("news", "news.csv"),
                           maybe("index", "index.csv"), vol_window, log_returns);
}

void split_rows(const KeyValueConfig& cfg, const AssetPanel& panel, Pipeline& p) {
  if (cfg.has("split.train")) {
    auto range_of = [&](const std::string& key) {
      const auto spec = cfg.get(key);
      const auto colon = spec.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error("cli: split range '" + spec + "' wants begin:end");
      const std::string a = spec.substr(0, colon), b = spec.substr(colon + 1);
      const auto lo = std::lower_bound(panel.dates.begin(), panel.dates.end(), a);
      const auto hi = std::lower_bound(panel.dates.begin(), panel.dates.end(), b);
      return std::pair<int, int>(static_cast<int>(lo - panel.dates.begin()),
                                 static_cast<int>(hi - panel.dates.begin()));
    };
    std::tie(p.train_begin, p.train_end) = range_of("split.train");
    std::tie(p.valid_begin, p.valid_end) = range_of("split.valid");
    std::tie(p.test_begin, p.test_end) = range_of("split.test");
  } else {
    const auto fracs = split_list(cfg.get_or("split.fractions", "0.6,0.2,0.2"));
    if (fracs.size() != 3) throw std::runtime_error("cli: need three split fractions");
    const double f0 = std::stod(fracs[0]), f1 = std::stod(fracs[1]);
    p.train_begin = 0;
    p.train_end = static_cast<int>(panel.days() * f0);
    p.valid_begin = p.train_end;
    p.valid_end = static_cast<int>(panel.days() * (f0 + f1));
    p.test_begin = p.valid_end;
    p.test_end = panel.days();
  }
  if (p.train_end <= p.train_begin || p.valid_end <= p.valid_begin ||
      p.test_end <= p.test_begin)
    throw std::runtime_error("cli: a split range is empty");
}

Pipeline build_pipeline(const KeyValueConfig& cfg, const std::string& out_dir) {
  Pipeline p;
  p.raw = load_panel(cfg, out_dir);
  split_rows(cfg, p.raw, p);
  p.stats = compute_norm_stats(p.raw, p.train_begin, p.train_end);
  p.zpanel = znormalize(p.raw, p.stats);
  p.series = to_series_panel(p.zpanel);
  const int horizon = static_cast<int>(cfg.get_long("model.regime_horizon", 3));
  p.labels = p.raw.has_index() ? regime_label(p.raw.index_return, horizon)
                               : IntVector::Constant(p.raw.days(), -1);
  const auto targets = p.series.target_indices();
  p.raw_returns.resize(p.raw.days(), static_cast<Eigen::Index>(targets.size()));
  for (size_t a = 0; a < targets.size(); ++a)
    p.raw_returns.col(static_cast<Eigen::Index>(a)) =
        p.raw.ret.col(static_cast<Eigen::Index>(a));
  return p;
}

DiscoveryConfig discovery_config(const KeyValueConfig& cfg) {
  DiscoveryConfig d;
  d.max_lag = static_cast<int>(cfg.get_long("discovery.max_lag", 5));
  d.alpha = cfg.get_double("discovery.alpha", 0.01);
  d.max_candidates = static_cast<int>(cfg.get_long("discovery.max_candidates", 32));
  return d;
}

std::vector<CausalHypergraph> run_discovery(const KeyValueConfig& cfg,
                                            const SeriesPanel& series) {
  const DiscoveryConfig d = discovery_config(cfg);
  const int window = static_cast<int>(cfg.get_long("discovery.window_length", 0));
  if (window <= 0) return {build_hypergraph(series, d)};
  int stride = static_cast<int>(cfg.get_long("discovery.stride", 0));
  if (stride <= 0) stride = window;
  return sliding_window_update(series, window, stride, d);
}

ModelConfig model_config(const KeyValueConfig& cfg, uint64_t seed) {
  ModelConfig m;
  m.layers = static_cast<int>(cfg.get_long("model.layers", 2));
  m.hidden_width = static_cast<int>(cfg.get_long("model.hidden", 64));
  m.heads = static_cast<int>(cfg.get_long("model.heads", 4));
  m.lambda = cfg.get_double("model.lambda", 10.0);
  m.learning_rate = cfg.get_double("model.learning_rate", 1e-4);
  m.batch_size = static_cast<int>(cfg.get_long("model.batch", 32));
  m.max_lag = static_cast<int>(cfg.get_long("discovery.max_lag", 5));
  m.use_causal_mask = cfg.get_bool("model.use_causal_mask", true);
  m.use_spherical_attention = cfg.get_bool("model.use_spherical", true);
  m.seed = seed;
  m.ffn_width = static_cast<int>(cfg.get_long("model.ffn", 128));
  m.max_epochs = static_cast<int>(cfg.get_long("model.epochs", 100));
  m.patience = static_cast<int>(cfg.get_long("model.patience", 10));
  m.input_noise_sigma = cfg.get_double("model.input_noise", 0.0);
  m.angular_cutoff = cfg.get_double("model.angular_cutoff", 0.0);
  m.task = parse_task(cfg.get_or("model.task", "regression"));
  m.regime_horizon = static_cast<int>(cfg.get_long("model.regime_horizon", 3));
  return m;
}

struct TrainedModel {
  ModelState state;
  TrainResult result;
  GraphSchedule schedule;
  NodeLayout layout;
};

TrainedModel train_once(const KeyValueConfig& cfg, const Pipeline& p, uint64_t seed) {
  TrainedModel tm;
  const ModelConfig mc = model_config(cfg, seed);
  auto graphs = run_discovery(cfg, p.series);
  tm.layout = NodeLayout::build(p.series, mc.max_lag);
  tm.schedule = GraphSchedule::build(std::move(graphs), tm.layout, mc.use_causal_mask);
  tm.state = init_model(tm.layout, mc);
  const IntVector* labels = mc.task == Task::Regression ? nullptr : &p.labels;
  tm.result = train(tm.state, p.series, tm.schedule, labels, p.train_begin, p.train_end,
                    p.valid_begin, p.valid_end);
  return tm;
}

// --- commands ----------------------------------------------------------------

int cmd_generate(const RunContext& ctx) {
  const uint64_t seed = static_cast<uint64_t>(ctx.cfg.get_long("run.seed", 42));
  const PlantedSpec spec = spec_from_config(ctx.cfg, seed);
  auto [panel, truth] = gen_var_process(spec);

  // Export in panel-data's CSV schema. Per-series linear scalings keep every
  // planted relation intact (the tests are scale invariant): return series
  // integrate into price paths at 1% per unit, sentiment/news scale by 0.05.
  const fs::path dir = ctx.out_dir;
  const std::string day_before =
      days_to_iso(iso_to_days(panel.dates.front()) - 1);
  std::vector<std::string> price_dates = {day_before};
  price_dates.insert(price_dates.end(), panel.dates.begin(), panel.dates.end());

  auto integrate = [&](int col) {
    Vector prices(panel.days() + 1);
    prices(0) = 100.0;
    for (int t = 0; t < panel.days(); ++t)
      prices(t + 1) = prices(t) * (1.0 + 0.01 * panel.values(t, col));
    return prices;
  };

  RawTable prices, sentiment, news, volume, index;
  prices.dates = price_dates;
  volume.dates = panel.dates;
  sentiment.dates = panel.dates;
  news.dates = panel.dates;
  index.dates = price_dates;

  Rng volume_rng(seed, "volume");
  std::vector<Vector> price_cols, sent_cols, news_cols, volume_cols;
  for (int c = 0; c < panel.num_series(); ++c) {
    const auto& info = panel.series[c];
    if (info.modality == Modality::Return && info.id != "INDEX") {
      prices.columns.push_back(info.id);
      price_cols.push_back(integrate(c));
      volume.columns.push_back(info.id);
      Vector v(panel.days());
      for (int t = 0; t < panel.days(); ++t)
        v(t) = 1e6 * std::exp(0.2 * volume_rng.gaussian());
      volume_cols.push_back(v);
    } else if (info.modality == Modality::Sentiment) {
      sentiment.columns.push_back(info.id);
      sent_cols.push_back(Vector(0.05 * panel.values.col(c)));
    } else if (info.modality == Modality::News) {
      news.columns.push_back(info.id);
      news_cols.push_back(Vector(0.05 * panel.values.col(c)));
    } else {
      index.columns.push_back("INDEX");
      price_cols.push_back(integrate(c));
      index.values.resize(panel.days() + 1, 1);
      index.values.col(0) = price_cols.back();
      price_cols.pop_back();
    }
  }
  auto pack = [](RawTable& t, const std::vector<Vector>& cols) {
    if (cols.empty()) return;
    t.values.resize(cols[0].size(), static_cast<Eigen::Index>(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) t.values.col(static_cast<Eigen::Index>(j)) = cols[j];
  };
  pack(prices, price_cols);
  pack(sentiment, sent_cols);
  pack(news, news_cols);
  pack(volume, volume_cols);

  write_feature_csv((dir / "prices.csv").string(), prices);
  write_feature_csv((dir / "sentiment.csv").string(), sentiment);
  write_feature_csv((dir / "volume.csv").string(), volume);
  if (!news.columns.empty()) write_feature_csv((dir / "news.csv").string(), news);
  if (!index.columns.empty()) write_feature_csv((dir / "index.csv").string(), index);
  write_ground_truth((dir / "groundtruth.edges").string(), truth);
  std::cout << "generated " << panel.num_series() << " series over " << panel.days()
            << " days into " << ctx.out_dir << "\n";
  return 0;
}

int cmd_discover(const RunContext& ctx) {
  Pipeline p = build_pipeline(ctx.cfg, ctx.out_dir);
  const auto graphs = run_discovery(ctx.cfg, p.series);
  const fs::path dir = ctx.out_dir;
  write_hypergraph_adj((dir / "graphs.adj").string(), graphs);
  write_hypergraph_text((dir / "hypergraph.txt").string(), graphs);
  write_norm_stats((dir / "normstats.txt").string(), p.stats);

  std::ofstream summary(dir / "discovery_summary.txt");
  int histogram[10] = {0};
  int edge_count = 0, test_count = 0;
  for (const auto& g : graphs) {
    edge_count += static_cast<int>(g.edges.size());
    test_count += g.num_tests;
    for (const auto& t : g.tests) {
      int bin = static_cast<int>(t.p_value * 10);
      if (bin > 9) bin = 9;
      if (bin < 0) bin = 0;
      ++histogram[bin];
    }
  }
  summary << "graphs=" << graphs.size() << " hyperedges=" << edge_count
          << " tests=" << test_count << "\n";
  summary << "p-value histogram (width 0.1):";
  for (int b = 0; b < 10; ++b) summary << " " << histogram[b];
  summary << "\n";
  for (const auto& g : graphs)
    for (const auto& t : g.tests)
      if (!t.source_group.empty())
        summary << "test " << t.target << " <- " << t.source_group.front().series
                << " (" << modality_name(t.source_group.front().modality)
                << ") F=" << format_double(t.f_statistic)
                << " p=" << format_double(t.p_value) << " window=" << g.window_begin
                << ".." << g.window_end << "\n";
  std::cout << "discovered " << edge_count << " hyperedges over " << graphs.size()
            << " window(s), " << test_count << " tests\n";
  return 0;
}

int cmd_train(const RunContext& ctx) {
  Pipeline p = build_pipeline(ctx.cfg, ctx.out_dir);
  const uint64_t seed = static_cast<uint64_t>(ctx.cfg.get_long("run.seed", 42));
  const fs::path dir = ctx.out_dir;
  try {
    TrainedModel tm = train_once(ctx.cfg, p, seed);
    write_checkpoint((dir / "checkpoint.bin").string(), tm.state);
    write_training_log((dir / "training_log.csv").string(), tm.result.log);
    write_hypergraph_adj((dir / "graphs.adj").string(), tm.schedule.graphs);
    write_norm_stats((dir / "normstats.txt").string(), p.stats);
    write_embedding((dir / "embeddings.bin").string(), tm.layout.nodes,
                    tm.state.params.embed);
    std::cout << "trained " << tm.result.log.back().epoch << " epochs (best "
              << tm.result.best_epoch
              << "), final valid loss " << format_double(tm.result.log.back().valid_loss)
              << "\n";
    return 0;
  } catch (const TrainingDiverged& e) {
    write_training_log((dir / "training_log.csv").string(), e.log);
    throw;
  }
}

int cmd_evaluate(const RunContext& ctx) {
  Pipeline p = build_pipeline(ctx.cfg, ctx.out_dir);
  const fs::path dir = ctx.out_dir;
  const int ndcg_k = static_cast<int>(ctx.cfg.get_long("run.ndcg_k", 10));
  const bool per_day = ctx.cfg.get_bool("run.per_day_dump", false);
  EvalReport report;
  report.ndcg_k = ndcg_k;

  auto dump_days = [&](uint64_t seed, const EvalInputs& in, Task task) {
    if (!per_day) return;
    write_per_day_csv((dir / ("eval_days_" + std::to_string(seed) + ".csv")).string(),
                      in, p.series.dates, task, ndcg_k);
  };

  if (ctx.cfg.has("model.checkpoint")) {
    ModelState state = read_checkpoint(ctx.cfg.get("model.checkpoint"));
    bind_series_columns(state.layout, p.series);
    auto graphs = read_hypergraph_adj((dir / "graphs.adj").string());
    GraphSchedule schedule = GraphSchedule::build(std::move(graphs), state.layout,
                                                  state.config.use_causal_mask);
    report.task = state.config.task;
    const IntVector* labels = state.config.task == Task::Regression ? nullptr : &p.labels;
    EvalInputs inputs;
    report.per_seed.push_back(evaluate_model(state, p.series, schedule, &p.stats, labels,
                                             p.raw_returns, p.test_begin, p.test_end,
                                             ndcg_k, &inputs));
    dump_days(state.config.seed, inputs, report.task);
  } else {
    std::vector<uint64_t> seeds;
    for (const auto& s : split_list(ctx.cfg.get_or(
             "run.seeds", ctx.cfg.get_or("run.seed", "42"))))
      seeds.push_back(std::stoull(s));
    if (seeds.empty()) throw std::runtime_error("cli: no seeds configured");
    report.task = parse_task(ctx.cfg.get_or("model.task", "regression"));
    for (uint64_t seed : seeds) {
      TrainedModel tm = train_once(ctx.cfg, p, seed);
      const IntVector* labels =
          tm.state.config.task == Task::Regression ? nullptr : &p.labels;
      EvalInputs inputs;
      report.per_seed.push_back(evaluate_model(tm.state, p.series, tm.schedule, &p.stats,
                                               labels, p.raw_returns, p.test_begin,
                                               p.test_end, ndcg_k, &inputs));
      dump_days(seed, inputs, report.task);
    }
  }
  write_eval_report((dir / "eval_report.txt").string(),
                    (dir / "eval_report.csv").string(), report);
  const auto m = report.mae_summary();
  std::cout << "evaluated " << report.per_seed.size() << " seed(s): mae "
            << format_double(m.mean) << " +- " << format_double(m.stdev) << "\n";
  return 0;
}

int cmd_predict(const RunContext& ctx, const std::string& date, const std::string& asset,
                int top_k) {
  Pipeline p = build_pipeline(ctx.cfg, ctx.out_dir);
  const fs::path dir = ctx.out_dir;
  const std::string ckpt =
      ctx.cfg.get_or("model.checkpoint", (dir / "checkpoint.bin").string());
  ModelState state = read_checkpoint(ckpt);
  bind_series_columns(state.layout, p.series);
  auto graphs = read_hypergraph_adj((dir / "graphs.adj").string());
  GraphSchedule schedule =
      GraphSchedule::build(std::move(graphs), state.layout, state.config.use_causal_mask);

  const auto it = std::find(p.series.dates.begin(), p.series.dates.end(), date);
  if (it == p.series.dates.end())
    throw std::runtime_error("cli: date " + date + " not in the panel");
  const int t = static_cast<int>(it - p.series.dates.begin());
  if (t < state.config.max_lag - 1 || t + 1 >= p.series.days())
    throw std::runtime_error("cli: date " + date + " lacks history or a next day");

  const IntVector* labels = state.config.task == Task::Regression ? nullptr : &p.labels;
  WindowBatch batch = assemble_batch(p.series, state.layout, {t}, schedule,
                                     labels, 0.0, nullptr);
  AttentionCapture capture;
  ForwardResult fr = forward(state, batch, schedule, &capture);

  const int nt = state.layout.num_targets();
  int asset_ord = 0;
  if (!asset.empty()) {
    asset_ord = -1;
    for (int a = 0; a < nt; ++a)
      if (state.layout.targets[a] == asset) asset_ord = a;
    if (asset_ord < 0) throw std::runtime_error("cli: unknown asset '" + asset + "'");
  }

  std::cout << "forecasts for the day after " << date << " (raw return units):\n";
  for (int a = 0; a < nt; ++a) {
    double pred = fr.reg_pred(0, a);
    const int si = p.stats.find("ret:" + state.layout.targets[a]);
    if (si >= 0 && !p.stats.degenerate[si])
      pred = pred * p.stats.stdev(si) + p.stats.mean(si);
    std::cout << "  " << state.layout.targets[a] << " " << format_double(pred) << "\n";
  }
  if (state.config.task != Task::Regression) {
    const double prob = 1.0 / (1.0 + std::exp(-fr.cls_logit(0)));
    std::cout << "regime: bull probability " << format_double(prob) << "\n";
  }

  // attention path report for one target, averaged over layers and heads
  const int ti = state.layout.target_node[asset_ord];
  std::vector<std::pair<double, int>> weights;
  for (int j = 0; j < state.layout.size(); ++j)
    if (j != ti && capture.mean_weights(ti, j) > 0)
      weights.push_back({capture.mean_weights(ti, j), j});
  std::sort(weights.begin(), weights.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::cout << "attention path for " << state.layout.targets[asset_ord] << ":\n";
  const int shown = std::min<int>(top_k, static_cast<int>(weights.size()));
  for (int i = 0; i < shown; ++i)
    std::cout << "  " << state.layout.nodes[weights[i].second].str() << " "
              << format_double(weights[i].first) << "\n";
  if (weights.empty()) std::cout << "  (all attention on the node itself)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal-hypergraph spherical-attention forecasting pipeline"};
  app.require_subcommand(1);

  CliOverrides ov;
  std::string date, asset;
  int top_k = 10;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", ov.config_path, "run configuration file")->required();
    sub->add_option("--out", ov.out_dir, "output directory (overrides run.out)");
    sub->add_option("--seed", ov.seed, "seed (overrides run.seed; default 42)")
        ->each([&](const std::string&) { ov.seed_set = true; });
    sub->add_option("--task", ov.task,
                    "regression | classification | both (default regression)");
    sub->add_flag("--no-causal-mask", ov.no_causal_mask,
                  "ablation: attend everywhere (default: Granger mask on)");
    sub->add_flag("--no-spherical", ov.no_spherical,
                  "ablation: scaled dot-product scores (default: cosine, lambda=10)");
    sub->add_option("--input-noise", ov.input_noise,
                    "sigma of Gaussian noise on sentiment/news inputs (default 0)");
  };

  add_common(app.add_subcommand("generate", "emit a seeded synthetic panel as CSVs"));
  add_common(app.add_subcommand("discover",
                                "fit Granger hypergraphs (maxLag=5, FDR alpha=0.01)"));
  add_common(app.add_subcommand("train", "train the masked angular-attention model"));
  add_common(app.add_subcommand("evaluate", "seeded train+test protocol with report"));
  auto* predict =
      app.add_subcommand("predict", "per-asset forecasts and attention paths");
  add_common(predict);
  predict->add_option("--date", date, "anchor date (ISO), predicts the next day")
      ->required();
  predict->add_option("--asset", asset, "asset for the attention report");
  predict->add_option("--top", top_k, "attention entries to print (default 10)");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunContext ctx = make_context(ov);
    if (app.got_subcommand("generate")) return cmd_generate(ctx);
    if (app.got_subcommand("discover")) return cmd_discover(ctx);
    if (app.got_subcommand("train")) return cmd_train(ctx);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(ctx);
    if (app.got_subcommand("predict")) return cmd_predict(ctx, date, asset, top_k);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

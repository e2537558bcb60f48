#include "csht/io.hpp"

#include "csht/synthetic.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace csht;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("csht_io_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.1, -1e-17, 3.141592653589793, 1e300, 0.0, 123456.789})
    CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("feature csv round trip") {
  TempDir tmp;
  RawTable t;
  t.dates = {"2020-01-02", "2020-01-03"};
  t.columns = {"AAPL", "MSFT"};
  t.values.resize(2, 2);
  t.values << 1.5, std::numeric_limits<double>::quiet_NaN(), -0.25, 3.75;
  write_feature_csv(tmp.file("x.csv"), t);
  RawTable back = read_feature_csv(tmp.file("x.csv"));
  CHECK(back.dates == t.dates);
  CHECK(back.columns == t.columns);
  CHECK(back.values(0, 0) == 1.5);
  CHECK(std::isnan(back.values(0, 1)));
  CHECK(back.values(1, 1) == 3.75);
}

TEST_CASE("norm stats round trip with degenerate flags") {
  TempDir tmp;
  NormStats s;
  s.keys = {"ret:A", "sent:A"};
  s.mean.resize(2);
  s.stdev.resize(2);
  s.mean << 0.001, 0.0;
  s.stdev << 0.02, 0.0;
  s.degenerate = {0, 1};
  write_norm_stats(tmp.file("stats.txt"), s);
  NormStats back = read_norm_stats(tmp.file("stats.txt"));
  CHECK(back.keys == s.keys);
  CHECK(back.mean(0) == s.mean(0));
  CHECK(back.stdev(0) == s.stdev(0));
  CHECK(back.degenerate == s.degenerate);
  CHECK(back.find("sent:A") == 1);
  CHECK(back.find("nope") == -1);
}

TEST_CASE("hypergraph serialization round trip") {
  TempDir tmp;
  auto [panel, truth] = gen_var_process(csht::testing::benchmark_spec(900, 5));
  DiscoveryConfig cfg;
  std::vector<CausalHypergraph> graphs = {build_hypergraph(panel, cfg)};
  REQUIRE(!graphs[0].edges.empty());

  write_hypergraph_adj(tmp.file("g.adj"), graphs);
  auto back = read_hypergraph_adj(tmp.file("g.adj"));
  REQUIRE(back.size() == 1);
  CHECK(back[0].window_begin == graphs[0].window_begin);
  CHECK(back[0].window_end == graphs[0].window_end);
  CHECK(back[0].num_tests == graphs[0].num_tests);
  CHECK(back[0].source_target_pairs() == graphs[0].source_target_pairs());
  REQUIRE(back[0].edges.size() == graphs[0].edges.size());
  CHECK(back[0].edges[0].joint.f_statistic == graphs[0].edges[0].joint.f_statistic);
  CHECK(back[0].edges[0].joint.p_value == graphs[0].edges[0].joint.p_value);
  CHECK(back[0].edges[0].parents == graphs[0].edges[0].parents);

  // the human-readable grammar
  write_hypergraph_text(tmp.file("g.txt"), graphs);
  const std::string text = slurp(tmp.file("g.txt"));
  CHECK(text.find("TARGET ") != std::string::npos);
  CHECK(text.find(" <- {") != std::string::npos);
  CHECK(text.find(" F=") != std::string::npos);
  CHECK(text.find(" window=") != std::string::npos);
}

TEST_CASE("ground truth round trip") {
  TempDir tmp;
  GroundTruthGraph truth;
  truth.edges.push_back({{Modality::Sentiment, "A0", 1}, "A0", 0.6, 0, 500});
  truth.edges.push_back({{Modality::News, "A1", 3}, "A2", -0.4, 250, 500});
  write_ground_truth(tmp.file("t.edges"), truth);
  GroundTruthGraph back = read_ground_truth(tmp.file("t.edges"));
  REQUIRE(back.edges.size() == 2);
  CHECK(back.edges[1].source.str() == "news:A1:3");
  CHECK(back.edges[1].coeff == -0.4);
  CHECK(back.edges[1].from_day == 250);
  CHECK(back.active_pairs(0, 500) ==
        std::set<std::pair<std::string, std::string>>{{"sent:A0", "A0"}});
}

TEST_CASE("embedding table round trip preserves bits") {
  TempDir tmp;
  std::vector<LaggedNode> nodes = {{Modality::Return, "A0", 0},
                                   {Modality::Sentiment, "B", 2}};
  Matrix table(2, 4);
  table << 0.1, -0.9, 1e-17, 3.0, 0.5, 0.5, 0.5, 0.5;
  write_embedding(tmp.file("e.bin"), nodes, table);
  auto [back_nodes, back_table] = read_embedding(tmp.file("e.bin"));
  CHECK(back_nodes == nodes);
  CHECK(back_table == table);
}

TEST_CASE("checkpoint round trip preserves config, nodes and parameters") {
  TempDir tmp;
  PlantedSpec spec = make_asset_spec(2, 1, true, 80, 12);
  SeriesPanel panel = gen_var_process(spec).first;
  ModelConfig cfg;
  cfg.hidden_width = 8;
  cfg.heads = 2;
  cfg.ffn_width = 12;
  cfg.max_lag = 2;
  cfg.task = Task::Both;
  cfg.lambda = 7.5;
  NodeLayout layout = NodeLayout::build(panel, cfg.max_lag);
  ModelState state = init_model(layout, cfg);
  state.epoch = 17;

  write_checkpoint(tmp.file("ckpt.bin"), state);
  ModelState back = read_checkpoint(tmp.file("ckpt.bin"));
  CHECK(back.config.hidden_width == 8);
  CHECK(back.config.lambda == 7.5);
  CHECK(back.config.task == Task::Both);
  CHECK(back.epoch == 17);
  CHECK(back.layout.nodes == state.layout.nodes);
  CHECK(back.layout.targets == state.layout.targets);
  CHECK(flatten_params(back.params) == flatten_params(state.params));

  // re-binding the loaded layout to the same panel restores the columns
  bind_series_columns(back.layout, panel);
  CHECK(back.layout.series_col == state.layout.series_col);
}

TEST_CASE("config parser") {
  const std::string text =
      "# comment\n"
      "[data]\n"
      "source = synthetic\n"
      "vol_window = 12\n"
      "\n"
      "[model]\n"
      "lambda = 10.0  # trailing comment\n"
      "use_causal_mask = false\n";
  KeyValueConfig cfg = KeyValueConfig::parse_text(text);
  CHECK(cfg.get("data.source") == "synthetic");
  CHECK(cfg.get_long("data.vol_window", 0) == 12);
  CHECK(cfg.get_double("model.lambda", 0) == 10.0);
  CHECK(cfg.get_bool("model.use_causal_mask", true) == false);
  CHECK(cfg.get_or("model.missing", "dflt") == "dflt");
  CHECK(cfg.get_long("model.absent", 77) == 77);
  CHECK_THROWS(cfg.get("model.missing"));
  CHECK_THROWS(KeyValueConfig::parse_text("[broken\n"));
  CHECK_THROWS(KeyValueConfig::parse_text("no equals sign\n"));
}

TEST_CASE("training log format") {
  TempDir tmp;
  std::vector<EpochLog> log = {{0, 1.5, 1.6, 1.0}, {1, 1.2, 1.4, 1.0}};
  write_training_log(tmp.file("log.csv"), log);
  const std::string text = slurp(tmp.file("log.csv"));
  CHECK(text.rfind("epoch,train_loss,valid_loss,alignment\n", 0) == 0);
  CHECK(text.find("\n0,1.5,") != std::string::npos);
}

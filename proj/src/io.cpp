#include "csht/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "serialized blobs are little-endian");

namespace csht {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw std::runtime_error("io: cannot write '" + path + "'");
  return f;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
  if (!f) throw std::runtime_error("io: cannot read '" + path + "'");
  return f;
}

double parse_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("io: bad number '" + s + "'");
  }
}

void expect(std::istream& in, const std::string& token, const std::string& where) {
  std::string got;
  in >> got;
  if (got != token)
    throw std::runtime_error("io: expected '" + token + "' in " + where + ", got '" +
                             got + "'");
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

RawTable read_feature_csv(const std::string& path) {
  auto f = open_in(path);
  RawTable t;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("io: empty csv '" + path + "'");
  auto header = split(trim(line), ',');
  if (header.size() < 2 || trim(header[0]) != "date")
    throw std::runtime_error("io: csv '" + path + "' must start with a date column");
  for (size_t j = 1; j < header.size(); ++j) t.columns.push_back(trim(header[j]));

  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    line = trim(line);
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (cells.size() != header.size())
      throw std::runtime_error("io: ragged row in '" + path + "' at date " + cells[0]);
    t.dates.push_back(trim(cells[0]));
    std::vector<double> row;
    for (size_t j = 1; j < cells.size(); ++j) {
      const std::string c = trim(cells[j]);
      row.push_back(c.empty() || c == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                            : parse_double(c));
    }
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(t.columns.size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < t.columns.size(); ++j)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  for (size_t i = 1; i < t.dates.size(); ++i)
    if (!(t.dates[i - 1] < t.dates[i]))
      throw std::runtime_error("io: dates not increasing in '" + path + "'");
  return t;
}

void write_feature_csv(const std::string& path, const RawTable& table) {
  auto f = open_out(path);
  f << "date";
  for (const auto& c : table.columns) f << "," << c;
  f << "\n";
  for (size_t i = 0; i < table.dates.size(); ++i) {
    f << table.dates[i];
    for (Eigen::Index j = 0; j < table.values.cols(); ++j)
      f << "," << format_double(table.values(static_cast<Eigen::Index>(i), j));
    f << "\n";
  }
}

void write_norm_stats(const std::string& path, const NormStats& stats) {
  auto f = open_out(path);
  for (size_t i = 0; i < stats.keys.size(); ++i) {
    f << "mean." << stats.keys[i] << "=" << format_double(stats.mean(static_cast<Eigen::Index>(i))) << "\n";
    f << "stdev." << stats.keys[i] << "=" << format_double(stats.stdev(static_cast<Eigen::Index>(i))) << "\n";
    if (stats.degenerate[i]) f << "degenerate." << stats.keys[i] << "=1\n";
  }
}

NormStats read_norm_stats(const std::string& path) {
  auto f = open_in(path);
  std::vector<std::string> keys;
  std::vector<double> means, stdevs;
  std::vector<uint8_t> degen;
  std::string line;
  auto index_of = [&](const std::string& k) {
    for (size_t i = 0; i < keys.size(); ++i)
      if (keys[i] == k) return static_cast<int>(i);
    keys.push_back(k);
    means.push_back(0);
    stdevs.push_back(0);
    degen.push_back(0);
    return static_cast<int>(keys.size() - 1);
  };
  while (std::getline(f, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto dot = line.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw std::runtime_error("io: bad stats line '" + line + "'");
    const std::string kind = line.substr(0, dot);
    const std::string key = line.substr(dot + 1, eq - dot - 1);
    const std::string val = line.substr(eq + 1);
    const int i = index_of(key);
    if (kind == "mean") means[i] = parse_double(val);
    else if (kind == "stdev") stdevs[i] = parse_double(val);
    else if (kind == "degenerate") degen[i] = 1;
    else throw std::runtime_error("io: bad stats kind '" + kind + "'");
  }
  NormStats s;
  s.keys = keys;
  s.mean.resize(static_cast<Eigen::Index>(keys.size()));
  s.stdev.resize(static_cast<Eigen::Index>(keys.size()));
  s.degenerate = degen;
  for (size_t i = 0; i < keys.size(); ++i) {
    s.mean(static_cast<Eigen::Index>(i)) = means[i];
    s.stdev(static_cast<Eigen::Index>(i)) = stdevs[i];
  }
  return s;
}

void write_hypergraph_text(const std::string& path,
                           const std::vector<CausalHypergraph>& graphs) {
  auto f = open_out(path);
  for (const auto& g : graphs) {
    for (const auto& e : g.edges) {
      f << "TARGET " << e.target << " <- {";
      for (size_t i = 0; i < e.parents.size(); ++i) {
        if (i) f << ", ";
        f << e.parents[i].str();
      }
      f << "} F=" << format_double(e.joint.f_statistic)
        << " p=" << format_double(e.joint.p_value) << " window=" << g.window_begin
        << ".." << g.window_end << "\n";
    }
  }
}

void write_hypergraph_adj(const std::string& path,
                          const std::vector<CausalHypergraph>& graphs) {
  auto f = open_out(path);
  f << "CSHT-GRAPHS v1\n";
  f << "graphs " << graphs.size() << "\n";
  for (const auto& g : graphs) {
    f << "graph window " << g.window_begin << " " << g.window_end << " tests "
      << g.num_tests << " edges " << g.edges.size() << "\n";
    for (const auto& e : g.edges) {
      f << "edge " << e.target << " F=" << format_double(e.joint.f_statistic)
        << " p=" << format_double(e.joint.p_value)
        << " rssR=" << format_double(e.joint.rss_restricted)
        << " rssF=" << format_double(e.joint.rss_full) << " q=" << e.joint.dof_num
        << " den=" << e.joint.dof_den << " parents " << e.parents.size();
      for (const auto& p : e.parents) f << " " << p.str();
      f << "\n";
    }
    f << "endgraph\n";
  }
}

std::vector<CausalHypergraph> read_hypergraph_adj(const std::string& path) {
  auto f = open_in(path);
  std::string magic, version;
  f >> magic >> version;
  if (magic != "CSHT-GRAPHS" || version != "v1")
    throw std::runtime_error("io: '" + path + "' is not a hypergraph schedule");
  expect(f, "graphs", path);
  int count = 0;
  f >> count;
  std::vector<CausalHypergraph> graphs;
  for (int gi = 0; gi < count; ++gi) {
    CausalHypergraph g;
    expect(f, "graph", path);
    expect(f, "window", path);
    f >> g.window_begin >> g.window_end;
    expect(f, "tests", path);
    f >> g.num_tests;
    expect(f, "edges", path);
    int ne = 0;
    f >> ne;
    std::set<LaggedNode> node_set;
    for (int ei = 0; ei < ne; ++ei) {
      Hyperedge e;
      expect(f, "edge", path);
      f >> e.target;
      std::string tok;
      f >> tok;  // F=
      e.joint.f_statistic = parse_double(tok.substr(2));
      f >> tok;
      e.joint.p_value = parse_double(tok.substr(2));
      f >> tok;
      e.joint.rss_restricted = parse_double(tok.substr(5));
      f >> tok;
      e.joint.rss_full = parse_double(tok.substr(5));
      f >> tok;
      e.joint.dof_num = static_cast<int>(parse_double(tok.substr(2)));
      f >> tok;
      e.joint.dof_den = static_cast<int>(parse_double(tok.substr(4)));
      e.joint.target = e.target;
      expect(f, "parents", path);
      int np = 0;
      f >> np;
      for (int pi = 0; pi < np; ++pi) {
        f >> tok;
        e.parents.push_back(parse_lagged_node(tok));
        node_set.insert(e.parents.back());
      }
      node_set.insert({Modality::Return, e.target, 0});
      g.edges.push_back(std::move(e));
    }
    expect(f, "endgraph", path);
    g.nodes.assign(node_set.begin(), node_set.end());
    graphs.push_back(std::move(g));
  }
  return graphs;
}

void write_ground_truth(const std::string& path, const GroundTruthGraph& truth) {
  auto f = open_out(path);
  f << "CSHT-TRUTH v1\n";
  for (const auto& e : truth.edges)
    f << "edge " << e.source.str() << " -> " << e.target << " c=" << format_double(e.coeff)
      << " days=" << e.from_day << ".." << e.to_day << "\n";
}

GroundTruthGraph read_ground_truth(const std::string& path) {
  auto f = open_in(path);
  std::string magic, version;
  f >> magic >> version;
  if (magic != "CSHT-TRUTH" || version != "v1")
    throw std::runtime_error("io: '" + path + "' is not a ground-truth edge list");
  GroundTruthGraph truth;
  std::string tok;
  while (f >> tok) {
    if (tok != "edge") throw std::runtime_error("io: bad truth line near '" + tok + "'");
    GroundTruthEdge e;
    f >> tok;
    e.source = parse_lagged_node(tok);
    expect(f, "->", path);
    f >> e.target;
    f >> tok;
    e.coeff = parse_double(tok.substr(2));
    f >> tok;
    const auto dd = tok.substr(5);
    const auto sep = dd.find("..");
    e.from_day = std::stoi(dd.substr(0, sep));
    e.to_day = std::stoi(dd.substr(sep + 2));
    truth.edges.push_back(e);
  }
  return truth;
}

void write_embedding(const std::string& path, const std::vector<LaggedNode>& nodes,
                     const Matrix& table) {
  if (static_cast<size_t>(table.rows()) != nodes.size())
    throw std::invalid_argument("io: embedding rows do not match nodes");
  auto f = open_out(path, true);
  f << "CSHT-EMBED v1\n";
  f << "dim " << table.cols() << "\n";
  f << "nodes " << nodes.size() << "\n";
  for (const auto& n : nodes) f << n.str() << "\n";
  f << "blob\n";
  for (Eigen::Index i = 0; i < table.rows(); ++i)
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      const double v = table(i, j);
      f.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
}

std::pair<std::vector<LaggedNode>, Matrix> read_embedding(const std::string& path) {
  auto f = open_in(path, true);
  std::string line;
  std::getline(f, line);
  if (trim(line) != "CSHT-EMBED v1")
    throw std::runtime_error("io: '" + path + "' is not an embedding table");
  int dim = 0;
  long count = 0;
  std::getline(f, line);
  if (std::sscanf(line.c_str(), "dim %d", &dim) != 1)
    throw std::runtime_error("io: bad embedding dim line");
  std::getline(f, line);
  if (std::sscanf(line.c_str(), "nodes %ld", &count) != 1)
    throw std::runtime_error("io: bad embedding nodes line");
  std::vector<LaggedNode> nodes;
  for (long i = 0; i < count; ++i) {
    std::getline(f, line);
    nodes.push_back(parse_lagged_node(trim(line)));
  }
  std::getline(f, line);
  if (trim(line) != "blob") throw std::runtime_error("io: missing embedding blob");
  Matrix table(count, dim);
  for (long i = 0; i < count; ++i)
    for (int j = 0; j < dim; ++j) {
      double v;
      f.read(reinterpret_cast<char*>(&v), sizeof(double));
      if (!f) throw std::runtime_error("io: truncated embedding blob");
      table(i, j) = v;
    }
  return {nodes, table};
}

void write_checkpoint(const std::string& path, const ModelState& state) {
  auto f = open_out(path, true);
  const auto& c = state.config;
  f << "CSHT-CHECKPOINT v1\n";
  f << "layers=" << c.layers << "\n";
  f << "hidden=" << c.hidden_width << "\n";
  f << "heads=" << c.heads << "\n";
  f << "lambda=" << format_double(c.lambda) << "\n";
  f << "learning_rate=" << format_double(c.learning_rate) << "\n";
  f << "batch_size=" << c.batch_size << "\n";
  f << "max_lag=" << c.max_lag << "\n";
  f << "use_causal_mask=" << (c.use_causal_mask ? 1 : 0) << "\n";
  f << "use_spherical=" << (c.use_spherical_attention ? 1 : 0) << "\n";
  f << "seed=" << c.seed << "\n";
  f << "ffn=" << c.ffn_width << "\n";
  f << "max_epochs=" << c.max_epochs << "\n";
  f << "patience=" << c.patience << "\n";
  f << "input_noise=" << format_double(c.input_noise_sigma) << "\n";
  f << "angular_cutoff=" << format_double(c.angular_cutoff) << "\n";
  f << "task=" << task_name(c.task) << "\n";
  f << "regime_horizon=" << c.regime_horizon << "\n";
  f << "epoch=" << state.epoch << "\n";
  f << "nodes " << state.layout.nodes.size() << "\n";
  for (const auto& n : state.layout.nodes) f << n.str() << "\n";
  const Vector flat = flatten_params(state.params);
  f << "params " << flat.size() << "\n";
  f.write(reinterpret_cast<const char*>(flat.data()),
          static_cast<std::streamsize>(flat.size() * sizeof(double)));
}

ModelState read_checkpoint(const std::string& path) {
  auto f = open_in(path, true);
  std::string line;
  std::getline(f, line);
  if (trim(line) != "CSHT-CHECKPOINT v1")
    throw std::runtime_error("io: '" + path + "' is not a checkpoint");
  ModelConfig c;
  int epoch = 0;
  long node_count = -1;
  while (std::getline(f, line)) {
    line = trim(line);
    if (line.rfind("nodes ", 0) == 0) {
      node_count = std::stol(line.substr(6));
      break;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("io: bad checkpoint line '" + line + "'");
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "layers") c.layers = std::stoi(v);
    else if (k == "hidden") c.hidden_width = std::stoi(v);
    else if (k == "heads") c.heads = std::stoi(v);
    else if (k == "lambda") c.lambda = parse_double(v);
    else if (k == "learning_rate") c.learning_rate = parse_double(v);
    else if (k == "batch_size") c.batch_size = std::stoi(v);
    else if (k == "max_lag") c.max_lag = std::stoi(v);
    else if (k == "use_causal_mask") c.use_causal_mask = v == "1";
    else if (k == "use_spherical") c.use_spherical_attention = v == "1";
    else if (k == "seed") c.seed = std::stoull(v);
    else if (k == "ffn") c.ffn_width = std::stoi(v);
    else if (k == "max_epochs") c.max_epochs = std::stoi(v);
    else if (k == "patience") c.patience = std::stoi(v);
    else if (k == "input_noise") c.input_noise_sigma = parse_double(v);
    else if (k == "angular_cutoff") c.angular_cutoff = parse_double(v);
    else if (k == "task") c.task = parse_task(v);
    else if (k == "regime_horizon") c.regime_horizon = std::stoi(v);
    else if (k == "epoch") epoch = std::stoi(v);
    else throw std::runtime_error("io: unknown checkpoint key '" + k + "'");
  }
  if (node_count < 0) throw std::runtime_error("io: checkpoint has no node list");

  ModelState state;
  state.config = c;
  state.epoch = epoch;
  for (long i = 0; i < node_count; ++i) {
    std::getline(f, line);
    const LaggedNode n = parse_lagged_node(trim(line));
    const int at = static_cast<int>(state.layout.nodes.size());
    if (n.lag == 0) {
      state.layout.target_node.push_back(at);
      state.layout.targets.push_back(n.series);
      state.layout.target_ordinal.push_back(
          static_cast<int>(state.layout.targets.size()) - 1);
    } else {
      state.layout.target_ordinal.push_back(-1);
    }
    state.layout.nodes.push_back(n);
    state.layout.series_col.push_back(-1);  // bound to a panel later
  }
  std::getline(f, line);
  line = trim(line);
  if (line.rfind("params ", 0) != 0)
    throw std::runtime_error("io: checkpoint missing params header");
  const long flat_size = std::stol(line.substr(7));

  state.params = zero_params(static_cast<int>(node_count), c);
  if (flat_size != param_count(state.params))
    throw std::runtime_error("io: checkpoint parameter count mismatch");
  Vector flat(flat_size);
  f.read(reinterpret_cast<char*>(flat.data()),
         static_cast<std::streamsize>(flat_size * sizeof(double)));
  if (!f) throw std::runtime_error("io: truncated checkpoint blob");
  unflatten_params(state.params, flat);
  return state;
}

void write_training_log(const std::string& path, const std::vector<EpochLog>& log) {
  auto f = open_out(path);
  f << "epoch,train_loss,valid_loss,alignment\n";
  for (const auto& row : log)
    f << row.epoch << "," << format_double(row.train_loss) << ","
      << format_double(row.valid_loss) << "," << format_double(row.alignment) << "\n";
}

namespace {

void print_metrics_line(std::ostream& os, const char* label, double m, double a, double n,
                        double al) {
  os << label << " mae=" << format_double(m) << " accuracy=" << format_double(a)
     << " ndcg=" << format_double(n) << " alignment=" << format_double(al) << "\n";
}

}  // namespace

void write_eval_report(const std::string& text_path, const std::string& csv_path,
                       const EvalReport& report) {
  {
    auto f = open_out(text_path);
    f << "CSHT evaluation report\n";
    f << "task=" << task_name(report.task) << " ndcg_k=" << report.ndcg_k << "\n";
    f << "ndcg relevance: realized top-" << report.ndcg_k
      << " next-day returns, averaged per day\n";
    f << "mae in raw return units; accuracy on forward-regime labels\n";
    for (const auto& r : report.per_seed) {
      f << "seed " << r.seed << " (days=" << r.days << "):";
      f << " mae=" << format_double(r.mae) << " accuracy=" << format_double(r.accuracy)
        << " ndcg=" << format_double(r.ndcg)
        << " alignment=" << format_double(r.alignment) << "\n";
      for (const auto& w : r.per_window)
        f << "  window " << w.window_begin << ".." << w.window_end
          << " days=" << w.days << " mae=" << format_double(w.mae)
          << " accuracy=" << format_double(w.accuracy)
          << " ndcg=" << format_double(w.ndcg) << "\n";
    }
    const auto m = report.mae_summary();
    const auto a = report.accuracy_summary();
    const auto n = report.ndcg_summary();
    const auto al = report.alignment_summary();
    print_metrics_line(f, "mean:", m.mean, a.mean, n.mean, al.mean);
    print_metrics_line(f, "stdev:", m.stdev, a.stdev, n.stdev, al.stdev);
  }
  {
    auto f = open_out(csv_path);
    f << "seed,days,mae,accuracy,ndcg,alignment\n";
    for (const auto& r : report.per_seed)
      f << r.seed << "," << r.days << "," << format_double(r.mae) << ","
        << format_double(r.accuracy) << "," << format_double(r.ndcg) << ","
        << format_double(r.alignment) << "\n";
    const auto m = report.mae_summary();
    const auto a = report.accuracy_summary();
    const auto n = report.ndcg_summary();
    const auto al = report.alignment_summary();
    f << "mean," << format_double(static_cast<double>(report.per_seed.size())) << ","
      << format_double(m.mean) << "," << format_double(a.mean) << ","
      << format_double(n.mean) << "," << format_double(al.mean) << "\n";
    f << "stdev,," << format_double(m.stdev) << "," << format_double(a.stdev) << ","
      << format_double(n.stdev) << "," << format_double(al.stdev) << "\n";
  }
}

void write_per_day_csv(const std::string& path, const EvalInputs& in,
                       const std::vector<std::string>& dates, Task task, int k) {
  auto f = open_out(path);
  f << "date,mae,ndcg,pred_label,true_label\n";
  const int nt = static_cast<int>(in.pred_raw.cols());
  for (size_t s = 0; s < in.anchors.size(); ++s) {
    const auto row = static_cast<Eigen::Index>(s);
    double day_mae = std::numeric_limits<double>::quiet_NaN();
    double day_ndcg = std::numeric_limits<double>::quiet_NaN();
    if (task != Task::Classification) {
      day_mae = (in.pred_raw.row(row) - in.target_raw.row(row)).array().abs().mean();
      std::vector<int> order(nt);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (in.target_raw(row, a) != in.target_raw(row, b))
          return in.target_raw(row, a) > in.target_raw(row, b);
        return a < b;
      });
      std::vector<int> rel(nt, 0);
      for (int r = 0; r < std::min(k, nt); ++r) rel[order[r]] = 1;
      const auto nd = ndcg_at_k(in.pred_raw.row(row).transpose(), rel, std::min(k, nt));
      if (nd) day_ndcg = *nd;
    }
    f << dates[in.anchors[s]] << "," << format_double(day_mae) << ","
      << format_double(day_ndcg) << ",";
    if (task != Task::Regression && in.labels(row) >= 0)
      f << (in.cls_logit(row) > 0 ? 1 : 0) << "," << in.labels(row);
    else
      f << ",";
    f << "\n";
  }
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  auto f = open_in(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_text(ss.str());
}

KeyValueConfig KeyValueConfig::parse_text(const std::string& text) {
  KeyValueConfig cfg;
  std::string section;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::runtime_error("io: bad section '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("io: config line without '=': '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    cfg.entries_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

bool KeyValueConfig::has(const std::string& key) const {
  return entries_.find(key) != entries_.end();
}

std::string KeyValueConfig::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw std::runtime_error("io: missing config key '" + key + "'");
  return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_double(get(key)) : fallback;
}

long KeyValueConfig::get_long(const std::string& key, long fallback) const {
  return has(key) ? std::stol(get(key)) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::runtime_error("io: bad boolean '" + v + "' for key '" + key + "'");
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

}  // namespace csht

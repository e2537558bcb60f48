#include "csht/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace csht {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / kSqrt2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x / kSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// log(1 + e^z), overflow-safe
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

Task parse_task(const std::string& s) {
  if (s == "regression") return Task::Regression;
  if (s == "classification") return Task::Classification;
  if (s == "both") return Task::Both;
  throw std::invalid_argument("model: unknown task '" + s + "'");
}

const char* task_name(Task t) {
  switch (t) {
    case Task::Regression: return "regression";
    case Task::Classification: return "classification";
    case Task::Both: return "both";
  }
  throw std::logic_error("model: bad task");
}

void ModelConfig::validate() const {
  if (layers < 1) throw std::invalid_argument("model: need at least one layer");
  if (hidden_width < 1 || heads < 1 || hidden_width % heads != 0)
    throw std::invalid_argument("model: hidden width must be divisible by heads");
  if (!(lambda > 0)) throw std::invalid_argument("model: lambda must be positive");
  if (batch_size < 1) throw std::invalid_argument("model: batch size must be >= 1");
  if (max_lag < 1) throw std::invalid_argument("model: max lag must be >= 1");
  if (ffn_width < 1) throw std::invalid_argument("model: ffn width must be >= 1");
  if (angular_cutoff < 0) throw std::invalid_argument("model: angular cutoff must be >= 0");
  if (input_noise_sigma < 0) throw std::invalid_argument("model: noise sigma must be >= 0");
}

MaskMatrix::MaskMatrix(int n, bool all_allowed) : n_(n) {
  if (n <= 0) throw std::invalid_argument("model: empty node window");
  dense_.assign(static_cast<size_t>(n) * n, all_allowed ? 1 : 0);
  rows_.resize(n);
  if (all_allowed)
    for (int i = 0; i < n; ++i) {
      rows_[i].resize(n);
      std::iota(rows_[i].begin(), rows_[i].end(), 0);
    }
}

void MaskMatrix::allow(int i, int j) {
  if (i < 0 || i >= n_ || j < 0 || j >= n_)
    throw std::out_of_range("model: mask index out of range");
  auto& cell = dense_[static_cast<size_t>(i) * n_ + j];
  if (!cell) {
    cell = 1;
    rows_[i].push_back(j);
  }
}

void MaskMatrix::finalize() {
  for (int i = 0; i < n_; ++i) {
    std::sort(rows_[i].begin(), rows_[i].end());
    if (rows_[i].empty())
      throw std::runtime_error("model: mask row " + std::to_string(i) +
                               " has no allowed entries");
  }
}

NodeLayout NodeLayout::build(const SeriesPanel& panel, int tau) {
  if (tau < 1) throw std::invalid_argument("model: tau must be >= 1");
  NodeLayout layout;
  for (int c = 0; c < panel.num_series(); ++c) {
    if (!panel.series[c].is_target) continue;
    layout.target_node.push_back(static_cast<int>(layout.nodes.size()));
    layout.targets.push_back(panel.series[c].id);
    layout.nodes.push_back({Modality::Return, panel.series[c].id, 0});
    layout.series_col.push_back(c);
    layout.target_ordinal.push_back(static_cast<int>(layout.targets.size()) - 1);
  }
  if (layout.targets.empty()) throw std::invalid_argument("model: panel has no target series");
  for (int c = 0; c < panel.num_series(); ++c)
    for (int l = 1; l <= tau; ++l) {
      layout.nodes.push_back({panel.series[c].modality, panel.series[c].id, l});
      layout.series_col.push_back(c);
      layout.target_ordinal.push_back(-1);
    }
  return layout;
}

void bind_series_columns(NodeLayout& layout, const SeriesPanel& panel) {
  for (size_t i = 0; i < layout.nodes.size(); ++i) {
    const int col = panel.find(layout.nodes[i].modality, layout.nodes[i].series);
    if (col < 0)
      throw std::runtime_error("model: panel lacks series for node " +
                               layout.nodes[i].str());
    layout.series_col[i] = col;
  }
}

namespace {

int node_index(const NodeLayout& layout, const LaggedNode& n) {
  for (size_t i = 0; i < layout.nodes.size(); ++i)
    if (layout.nodes[i] == n) return static_cast<int>(i);
  return -1;
}

void add_graph_edges(const CausalHypergraph& graph, const NodeLayout& layout,
                     MaskMatrix& mask) {
  for (const auto& e : graph.edges) {
    const int ti = node_index(layout, {Modality::Return, e.target, 0});
    if (ti < 0) {
      std::cerr << "model: warning: dropping hyperedge for absent target '" << e.target
                << "'\n";
      continue;
    }
    for (const auto& p : e.parents) {
      const int pi = node_index(layout, p);
      if (pi < 0) {
        std::cerr << "model: warning: dropping parent " << p.str()
                  << " outside the node window\n";
        continue;
      }
      mask.allow(ti, pi);
    }
  }
}

}  // namespace

MaskMatrix build_mask(const CausalHypergraph& graph, const NodeLayout& layout,
                      bool use_causal_mask) {
  if (!use_causal_mask) {
    MaskMatrix mask(layout.size(), true);
    mask.finalize();
    return mask;
  }
  MaskMatrix mask(layout.size(), false);
  for (int i = 0; i < layout.size(); ++i) mask.allow(i, i);
  add_graph_edges(graph, layout, mask);
  mask.finalize();
  return mask;
}

MaskMatrix build_sanctioned(const CausalHypergraph& graph, const NodeLayout& layout) {
  // Parents only, no self edges; rows may legitimately be empty.
  MaskMatrix mask(layout.size(), false);
  add_graph_edges(graph, layout, mask);
  return mask;
}

GraphSchedule GraphSchedule::build(std::vector<CausalHypergraph> graphs,
                                   const NodeLayout& layout, bool use_causal_mask) {
  if (graphs.empty()) throw std::invalid_argument("model: empty graph schedule");
  GraphSchedule s;
  s.graphs = std::move(graphs);
  for (const auto& g : s.graphs) {
    s.masks.push_back(build_mask(g, layout, use_causal_mask));
    s.sanctioned.push_back(build_sanctioned(g, layout));
  }
  return s;
}

int GraphSchedule::graph_for_date(const std::string& date) const {
  int found = -1;
  for (size_t i = 0; i < graphs.size(); ++i)
    if (graphs[i].window_begin <= date && date <= graphs[i].window_end)
      found = static_cast<int>(i);
  return found;
}

Vector flatten_params(const ModelParams& p) {
  Vector out(param_count(p));
  long at = 0;
  auto put_mat = [&](const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) out(at++) = m(r, c);
  };
  auto put_vec = [&](const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out(at++) = v(i);
  };
  put_mat(p.embed);
  put_mat(p.inject);
  for (const auto& l : p.layers) {
    put_mat(l.wq); put_vec(l.bq);
    put_mat(l.wk); put_vec(l.bk);
    put_mat(l.wv); put_vec(l.bv);
    put_mat(l.wo); put_vec(l.bo);
    put_mat(l.w1); put_vec(l.b1);
    put_mat(l.w2); put_vec(l.b2);
  }
  put_vec(p.w_reg);
  out(at++) = p.b_reg;
  put_vec(p.w_cls);
  out(at++) = p.b_cls;
  return out;
}

void unflatten_params(ModelParams& p, const Vector& flat) {
  if (flat.size() != param_count(p))
    throw std::invalid_argument("model: flat parameter size mismatch");
  long at = 0;
  auto get_mat = [&](Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat(at++);
  };
  auto get_vec = [&](Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = flat(at++);
  };
  get_mat(p.embed);
  get_mat(p.inject);
  for (auto& l : p.layers) {
    get_mat(l.wq); get_vec(l.bq);
    get_mat(l.wk); get_vec(l.bk);
    get_mat(l.wv); get_vec(l.bv);
    get_mat(l.wo); get_vec(l.bo);
    get_mat(l.w1); get_vec(l.b1);
    get_mat(l.w2); get_vec(l.b2);
  }
  get_vec(p.w_reg);
  p.b_reg = flat(at++);
  get_vec(p.w_cls);
  p.b_cls = flat(at++);
}

long param_count(const ModelParams& p) {
  long n = p.embed.size() + p.inject.size();
  for (const auto& l : p.layers)
    n += l.wq.size() + l.bq.size() + l.wk.size() + l.bk.size() + l.wv.size() +
         l.bv.size() + l.wo.size() + l.bo.size() + l.w1.size() + l.b1.size() +
         l.w2.size() + l.b2.size();
  n += p.w_reg.size() + 1 + p.w_cls.size() + 1;
  return n;
}

ModelParams zero_params(int nodes, const ModelConfig& config) {
  config.validate();
  const int d = config.hidden_width;
  ModelParams p;
  p.embed = Matrix::Zero(nodes, d);
  p.inject = Matrix::Zero(3, d);
  p.layers.resize(config.layers);
  for (auto& l : p.layers) {
    l.wq = Matrix::Zero(d, d);
    l.wk = Matrix::Zero(d, d);
    l.wv = Matrix::Zero(d, d);
    l.wo = Matrix::Zero(d, d);
    l.bq = Vector::Zero(d);
    l.bk = Vector::Zero(d);
    l.bv = Vector::Zero(d);
    l.bo = Vector::Zero(d);
    l.w1 = Matrix::Zero(config.ffn_width, d);
    l.b1 = Vector::Zero(config.ffn_width);
    l.w2 = Matrix::Zero(d, config.ffn_width);
    l.b2 = Vector::Zero(d);
  }
  p.w_reg = Vector::Zero(d);
  p.w_cls = Vector::Zero(d);
  return p;
}

ModelState init_model(const NodeLayout& layout, const ModelConfig& config) {
  config.validate();
  ModelState state;
  state.config = config;
  state.layout = layout;
  const int d = config.hidden_width;

  SphereEmbedding emb(layout.nodes, d);
  Rng embed_rng(config.seed, "init-embed");
  emb.init_random(embed_rng);
  state.params.embed = emb.table();

  Rng rng(config.seed, "init-dense");
  auto gauss_mat = [&](int rows, int cols, double scale) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.gaussian();
    return m;
  };
  state.params.inject = gauss_mat(3, d, 1.0 / std::sqrt(static_cast<double>(d)));
  state.params.layers.resize(config.layers);
  for (auto& l : state.params.layers) {
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    l.wq = gauss_mat(d, d, s);
    l.wk = gauss_mat(d, d, s);
    l.wv = gauss_mat(d, d, s);
    l.wo = gauss_mat(d, d, s);
    l.bq = Vector::Zero(d);
    l.bk = Vector::Zero(d);
    l.bv = Vector::Zero(d);
    l.bo = Vector::Zero(d);
    l.w1 = gauss_mat(config.ffn_width, d, s);
    l.b1 = Vector::Zero(config.ffn_width);
    l.w2 = gauss_mat(d, config.ffn_width, 1.0 / std::sqrt(static_cast<double>(config.ffn_width)));
    l.b2 = Vector::Zero(d);
  }
  state.params.w_reg = gauss_mat(d, 1, 1.0 / std::sqrt(static_cast<double>(d))).col(0);
  state.params.b_reg = 0.0;
  state.params.w_cls = gauss_mat(d, 1, 1.0 / std::sqrt(static_cast<double>(d))).col(0);
  state.params.b_cls = 0.0;
  return state;
}

std::vector<int> anchors_for_range(const SeriesPanel& panel, int tau, int row_begin,
                                   int row_end, Task task, int regime_horizon) {
  std::vector<int> anchors;
  const int lo = std::max(row_begin, tau);
  int hi = std::min(row_end, panel.days());
  if (task != Task::Regression) hi = std::min(hi, row_end - regime_horizon + 1);
  for (int u = lo; u < hi; ++u) anchors.push_back(u - 1);
  return anchors;
}

WindowBatch assemble_batch(const SeriesPanel& zpanel, const NodeLayout& layout,
                           const std::vector<int>& anchors, const GraphSchedule& schedule,
                           const IntVector* regime_labels, double noise_sigma,
                           Rng* noise_rng) {
  const int s_count = static_cast<int>(anchors.size());
  const int n = layout.size();
  WindowBatch batch;
  batch.anchors = anchors;
  batch.features = Matrix::Zero(s_count, n);
  batch.reg_targets.resize(s_count, layout.num_targets());
  batch.cls_labels = IntVector::Constant(s_count, -1);
  batch.graph_index.resize(s_count);
  for (int s = 0; s < s_count; ++s) {
    const int t = anchors[s];
    if (t < 0 || t + 1 >= zpanel.days())
      throw std::out_of_range("model: anchor outside the panel");
    const int gi = schedule.graph_for_date(zpanel.dates[t]);
    if (gi < 0)
      throw std::runtime_error("model: date " + zpanel.dates[t] +
                               " outside any graph window");
    batch.graph_index[s] = gi;
    for (int v = 0; v < n; ++v) {
      if (layout.target_ordinal[v] >= 0) continue;  // query slots carry no feature
      const int lag = layout.nodes[v].lag;
      if (t + 1 - lag < 0) throw std::out_of_range("model: anchor history truncated");
      double f = zpanel.values(t + 1 - lag, layout.series_col[v]);
      if (noise_sigma > 0 && noise_rng &&
          (layout.nodes[v].modality == Modality::Sentiment ||
           layout.nodes[v].modality == Modality::News))
        f += noise_sigma * noise_rng->gaussian();
      batch.features(s, v) = f;
    }
    for (int a = 0; a < layout.num_targets(); ++a)
      batch.reg_targets(s, a) =
          zpanel.values(t + 1, layout.series_col[layout.target_node[a]]);
    if (regime_labels) batch.cls_labels(s) = (*regime_labels)(t);
  }
  return batch;
}

// ---------------------------------------------------------------------------
// forward / backward
// ---------------------------------------------------------------------------

namespace {

struct LayerCache {
  Matrix h_in;
  Matrix q, k, v;
  Matrix qhat, khat;  // per-head normalized rows (spherical mode)
  Matrix qnorm, knorm;  // nodes x heads
  // weights[head][row] over the index list for that row
  std::vector<std::vector<Vector>> w;
  std::vector<std::vector<std::vector<int>>> idx;  // only filled under the angular cutoff
  Matrix concat;
  Matrix h_mid;
  Matrix f1, g;
};

struct SampleCache {
  Matrix h0;
  std::vector<LayerCache> layers;
  Matrix h_out;
  Vector h_target_mean;
};

const std::vector<int>& row_indices(const LayerCache& cache, const MaskMatrix& mask,
                                    int head, int i) {
  if (!cache.idx.empty() && !cache.idx[head].empty() && !cache.idx[head][i].empty())
    return cache.idx[head][i];
  return mask.row(i);
}

void forward_sample(const ModelState& state, const Vector& feats, const MaskMatrix& mask,
                    const MaskMatrix& sanctioned, SampleCache* cache,
                    AttentionStats* stats, AttentionCapture* capture, Matrix& h_out_buf,
                    Vector& reg_out, double& cls_out) {
  const auto& cfg = state.config;
  const auto& params = state.params;
  const auto& layout = state.layout;
  const int n = layout.size();
  const int d = cfg.hidden_width;
  const int dh = cfg.head_dim();
  const bool spherical = cfg.use_spherical_attention;
  // a cutoff of pi or more cannot exclude anything
  const bool cutoff_active =
      spherical && cfg.angular_cutoff > 0 && cfg.angular_cutoff < M_PI;
  const double cutoff_cos = cutoff_active ? std::cos(cfg.angular_cutoff) : -2.0;
  const double scale = spherical ? cfg.lambda : 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix h = params.embed;
  for (int v = 0; v < n; ++v) {
    const double f = feats(v);
    if (f != 0.0)
      h.row(v) += f * params.inject.row(static_cast<int>(layout.nodes[v].modality));
  }
  if (cache) cache->h0 = h;

  if (capture) capture->mean_weights = Matrix::Zero(n, n);
  const double capture_scale =
      capture ? 1.0 / static_cast<double>(cfg.layers * cfg.heads) : 0.0;

  for (int li = 0; li < cfg.layers; ++li) {
    const auto& lp = params.layers[li];
    LayerCache local;
    LayerCache& lc = cache ? cache->layers[li] : local;
    lc.h_in = h;
    lc.q = (h * lp.wq.transpose()).rowwise() + lp.bq.transpose();
    lc.k = (h * lp.wk.transpose()).rowwise() + lp.bk.transpose();
    lc.v = (h * lp.wv.transpose()).rowwise() + lp.bv.transpose();
    if (spherical) {
      lc.qhat.resize(n, d);
      lc.khat.resize(n, d);
      lc.qnorm.resize(n, cfg.heads);
      lc.knorm.resize(n, cfg.heads);
      for (int head = 0; head < cfg.heads; ++head) {
        const int off = head * dh;
        for (int i = 0; i < n; ++i) {
          const double qn = lc.q.row(i).segment(off, dh).norm();
          const double kn = lc.k.row(i).segment(off, dh).norm();
          if (!(qn > 0) || !(kn > 0))
            throw std::runtime_error("model: zero-length projection cannot be normalized");
          lc.qnorm(i, head) = qn;
          lc.knorm(i, head) = kn;
          lc.qhat.row(i).segment(off, dh) = lc.q.row(i).segment(off, dh) / qn;
          lc.khat.row(i).segment(off, dh) = lc.k.row(i).segment(off, dh) / kn;
        }
      }
    }
    lc.w.assign(cfg.heads, {});
    if (cutoff_active) lc.idx.assign(cfg.heads, {});
    lc.concat.resize(n, d);

    for (int head = 0; head < cfg.heads; ++head) {
      const int off = head * dh;
      lc.w[head].resize(n);
      if (cutoff_active) lc.idx[head].resize(n);
      double align_num = 0.0, align_den = 0.0;
      for (int i = 0; i < n; ++i) {
        std::vector<int> filtered;
        const std::vector<int>* idx = &mask.row(i);
        if (idx->empty())
          throw std::runtime_error("model: attention row without allowed entries");
        if (cutoff_active) {
          for (int j : *idx) {
            const double c = lc.qhat.row(i).segment(off, dh)
                                 .dot(lc.khat.row(j).segment(off, dh));
            if (j == i || c >= cutoff_cos) filtered.push_back(j);
          }
          lc.idx[head][i] = filtered;
          idx = &lc.idx[head][i];
        }
        const int m = static_cast<int>(idx->size());
        Vector scores(m);
        for (int a = 0; a < m; ++a) {
          const int j = (*idx)[a];
          const double dot =
              spherical
                  ? lc.qhat.row(i).segment(off, dh).dot(lc.khat.row(j).segment(off, dh))
                  : lc.q.row(i).segment(off, dh).dot(lc.k.row(j).segment(off, dh));
          scores(a) = scale * dot;
        }
        const double mx = scores.maxCoeff();
        Vector w = (scores.array() - mx).exp();
        w /= w.sum();
        lc.w[head][i] = w;

        Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(dh);
        for (int a = 0; a < m; ++a) out += w(a) * lc.v.row((*idx)[a]).segment(off, dh);
        lc.concat.row(i).segment(off, dh) = out;

        if (stats) {
          stats->max_row_sum_dev = std::max(stats->max_row_sum_dev, std::fabs(w.sum() - 1.0));
          for (int a = 0; a < m; ++a) {
            const int j = (*idx)[a];
            if (!mask.allowed(i, j)) stats->forbidden_mass += std::fabs(w(a));
            if (j != i) {
              align_den += w(a);
              if (sanctioned.allowed(i, j)) align_num += w(a);
            }
          }
        }
        if (capture)
          for (int a = 0; a < m; ++a)
            capture->mean_weights(i, (*idx)[a]) += capture_scale * w(a);
      }
      if (stats) {
        if (align_den > 0) {
          stats->align_ratio_sum += align_num / align_den;
          stats->align_ratio_count += 1;
        } else {
          stats->align_undefined += 1;
        }
      }
    }
    lc.h_mid = lc.h_in + ((lc.concat * lp.wo.transpose()).rowwise() + lp.bo.transpose());
    lc.f1 = (lc.h_mid * lp.w1.transpose()).rowwise() + lp.b1.transpose();
    lc.g = lc.f1.unaryExpr([](double x) { return gelu(x); });
    h = lc.h_mid + ((lc.g * lp.w2.transpose()).rowwise() + lp.b2.transpose());
  }

  h_out_buf = h;
  if (cache) cache->h_out = h;

  const int nt = layout.num_targets();
  reg_out.resize(nt);
  Vector hmean = Vector::Zero(d);
  for (int a = 0; a < nt; ++a) {
    const auto row = h.row(layout.target_node[a]);
    reg_out(a) = row.dot(params.w_reg) + params.b_reg;
    hmean += row.transpose();
  }
  hmean /= static_cast<double>(nt);
  if (cache) cache->h_target_mean = hmean;
  cls_out = hmean.dot(params.w_cls) + params.b_cls;
}

void zero_like(const ModelParams& p, ModelParams& g) {
  g.embed = Matrix::Zero(p.embed.rows(), p.embed.cols());
  g.inject = Matrix::Zero(p.inject.rows(), p.inject.cols());
  g.layers.resize(p.layers.size());
  for (size_t i = 0; i < p.layers.size(); ++i) {
    const auto& l = p.layers[i];
    auto& gl = g.layers[i];
    gl.wq = Matrix::Zero(l.wq.rows(), l.wq.cols());
    gl.wk = Matrix::Zero(l.wk.rows(), l.wk.cols());
    gl.wv = Matrix::Zero(l.wv.rows(), l.wv.cols());
    gl.wo = Matrix::Zero(l.wo.rows(), l.wo.cols());
    gl.bq = Vector::Zero(l.bq.size());
    gl.bk = Vector::Zero(l.bk.size());
    gl.bv = Vector::Zero(l.bv.size());
    gl.bo = Vector::Zero(l.bo.size());
    gl.w1 = Matrix::Zero(l.w1.rows(), l.w1.cols());
    gl.b1 = Vector::Zero(l.b1.size());
    gl.w2 = Matrix::Zero(l.w2.rows(), l.w2.cols());
    gl.b2 = Vector::Zero(l.b2.size());
  }
  g.w_reg = Vector::Zero(p.w_reg.size());
  g.b_reg = 0.0;
  g.w_cls = Vector::Zero(p.w_cls.size());
  g.b_cls = 0.0;
}

void backward_sample(const ModelState& state, const Vector& feats,
                     const SampleCache& cache, const MaskMatrix& mask,
                     const Vector& d_reg, double d_cls, ModelParams& grads) {
  const auto& cfg = state.config;
  const auto& params = state.params;
  const auto& layout = state.layout;
  const int n = layout.size();
  const int d = cfg.hidden_width;
  const int dh = cfg.head_dim();
  const bool spherical = cfg.use_spherical_attention;
  const double scale = spherical ? cfg.lambda : 1.0 / std::sqrt(static_cast<double>(dh));
  const int nt = layout.num_targets();

  Matrix dh_out = Matrix::Zero(n, d);
  for (int a = 0; a < nt; ++a) {
    const int ti = layout.target_node[a];
    dh_out.row(ti) += d_reg(a) * params.w_reg.transpose();
    grads.w_reg += d_reg(a) * cache.h_out.row(ti).transpose();
    grads.b_reg += d_reg(a);
  }
  if (d_cls != 0.0) {
    const double per = d_cls / static_cast<double>(nt);
    for (int a = 0; a < nt; ++a)
      dh_out.row(layout.target_node[a]) += per * params.w_cls.transpose();
    grads.w_cls += d_cls * cache.h_target_mean;
    grads.b_cls += d_cls;
  }

  Matrix dcur = dh_out;
  for (int li = cfg.layers - 1; li >= 0; --li) {
    const auto& lp = params.layers[li];
    const auto& lc = cache.layers[li];
    auto& gl = grads.layers[li];

    // feed-forward block
    const Matrix df2 = dcur;
    gl.w2 += df2.transpose() * lc.g;
    gl.b2 += df2.colwise().sum().transpose();
    Matrix dg = df2 * lp.w2;
    Matrix df1 = dg.array() * lc.f1.unaryExpr([](double x) { return gelu_grad(x); }).array();
    gl.w1 += df1.transpose() * lc.h_mid;
    gl.b1 += df1.colwise().sum().transpose();
    Matrix dh_mid = dcur + df1 * lp.w1;

    // attention block
    gl.wo += dh_mid.transpose() * lc.concat;
    gl.bo += dh_mid.colwise().sum().transpose();
    Matrix dconcat = dh_mid * lp.wo;

    Matrix dq = Matrix::Zero(n, d);
    Matrix dk = Matrix::Zero(n, d);
    Matrix dv = Matrix::Zero(n, d);
    for (int head = 0; head < cfg.heads; ++head) {
      const int off = head * dh;
      Matrix dkhat = spherical ? Matrix::Zero(n, dh) : Matrix();
      for (int i = 0; i < n; ++i) {
        const auto& idx = row_indices(lc, mask, head, i);
        const int m = static_cast<int>(idx.size());
        const Vector& w = lc.w[head][i];
        const auto do_i = dconcat.row(i).segment(off, dh);

        Vector dw(m);
        for (int a = 0; a < m; ++a) {
          const int j = idx[a];
          dv.row(j).segment(off, dh) += w(a) * do_i;
          dw(a) = do_i.dot(lc.v.row(j).segment(off, dh));
        }
        const double inner = w.dot(dw);
        const Vector ds = (w.array() * (dw.array() - inner)).matrix() * scale;

        if (spherical) {
          Eigen::RowVectorXd dqhat_i = Eigen::RowVectorXd::Zero(dh);
          for (int a = 0; a < m; ++a) {
            const int j = idx[a];
            dqhat_i += ds(a) * lc.khat.row(j).segment(off, dh);
            dkhat.row(j) += ds(a) * lc.qhat.row(i).segment(off, dh);
          }
          const auto qhat_i = lc.qhat.row(i).segment(off, dh);
          dq.row(i).segment(off, dh) +=
              (dqhat_i - qhat_i * qhat_i.dot(dqhat_i)) / lc.qnorm(i, head);
        } else {
          for (int a = 0; a < m; ++a) {
            const int j = idx[a];
            dq.row(i).segment(off, dh) += ds(a) * lc.k.row(j).segment(off, dh);
            dk.row(j).segment(off, dh) += ds(a) * lc.q.row(i).segment(off, dh);
          }
        }
      }
      if (spherical) {
        for (int j = 0; j < n; ++j) {
          const auto khat_j = lc.khat.row(j).segment(off, dh);
          dk.row(j).segment(off, dh) +=
              (dkhat.row(j) - khat_j * khat_j.dot(dkhat.row(j))) / lc.knorm(j, head);
        }
      }
    }

    gl.wq += dq.transpose() * lc.h_in;
    gl.bq += dq.colwise().sum().transpose();
    gl.wk += dk.transpose() * lc.h_in;
    gl.bk += dk.colwise().sum().transpose();
    gl.wv += dv.transpose() * lc.h_in;
    gl.bv += dv.colwise().sum().transpose();

    dcur = dh_mid + dq * lp.wq + dk * lp.wk + dv * lp.wv;
  }

  grads.embed += dcur;
  for (int v = 0; v < n; ++v) {
    const double f = feats(v);
    if (f != 0.0)
      grads.inject.row(static_cast<int>(layout.nodes[v].modality)) += f * dcur.row(v);
  }
}

struct BatchPass {
  double loss_value = 0.0;
  ForwardResult result;
};

BatchPass run_batch(const ModelState& state, const WindowBatch& batch,
                    const GraphSchedule& schedule, ModelParams* grads,
                    AttentionStats* stats, AttentionCapture* capture) {
  const auto& cfg = state.config;
  const int s_count = static_cast<int>(batch.anchors.size());
  const int nt = state.layout.num_targets();
  if (s_count == 0) throw std::invalid_argument("model: empty batch");

  BatchPass pass;
  pass.result.reg_pred.resize(s_count, nt);
  pass.result.cls_logit.resize(s_count);

  const bool reg_on = cfg.task != Task::Classification;
  const bool cls_on = cfg.task != Task::Regression;
  const double reg_norm = 1.0 / (static_cast<double>(s_count) * nt);
  const double cls_norm = 1.0 / static_cast<double>(s_count);

  double total = 0.0;
  for (int s = 0; s < s_count; ++s) {
    const MaskMatrix& mask = schedule.masks[batch.graph_index[s]];
    const MaskMatrix& sanctioned = schedule.sanctioned[batch.graph_index[s]];
    const Vector feats = batch.features.row(s).transpose();

    SampleCache cache;
    if (grads) cache.layers.resize(cfg.layers);
    Matrix h_out;
    Vector reg;
    double logit = 0.0;
    forward_sample(state, feats, mask, sanctioned, grads ? &cache : nullptr, stats,
                   capture && s == 0 ? capture : nullptr, h_out, reg, logit);
    pass.result.reg_pred.row(s) = reg.transpose();
    pass.result.cls_logit(s) = logit;

    Vector d_reg = Vector::Zero(nt);
    double d_cls = 0.0;
    if (reg_on) {
      for (int a = 0; a < nt; ++a) {
        const double diff = reg(a) - batch.reg_targets(s, a);
        if (!std::isfinite(reg(a)))
          throw std::runtime_error("model: NaN prediction at sample " + std::to_string(s));
        total += reg_norm * diff * diff;
        d_reg(a) = 2.0 * reg_norm * diff;
      }
    }
    if (cls_on) {
      const int y = batch.cls_labels(s);
      if (y < 0)
        throw std::runtime_error("model: sample " + std::to_string(s) +
                                 " lacks a regime label");
      if (!std::isfinite(logit))
        throw std::runtime_error("model: NaN logit at sample " + std::to_string(s));
      total += cls_norm * (softplus(logit) - y * logit);
      d_cls = cls_norm * (sigmoid(logit) - y);
    }
    if (grads) backward_sample(state, feats, cache, mask, d_reg, d_cls, *grads);
  }
  pass.loss_value = total;
  return pass;
}

}  // namespace

ForwardResult forward(const ModelState& state, const WindowBatch& batch,
                      const GraphSchedule& schedule, AttentionCapture* capture) {
  AttentionStats stats;
  BatchPass pass = run_batch(state, batch, schedule, nullptr, &stats, capture);
  pass.result.attn = stats;
  return pass.result;
}

AttentionResult masked_attention(const Matrix& queries, const Matrix& keys,
                                 const Matrix& values, const MaskMatrix& mask,
                                 double lambda, bool spherical, double angular_cutoff) {
  const int n = static_cast<int>(queries.rows());
  if (keys.rows() != n || values.rows() != n || mask.size() != n)
    throw std::invalid_argument("model: attention shape mismatch");
  if (!(lambda > 0) && spherical)
    throw std::invalid_argument("model: lambda must be positive");
  const int dh = static_cast<int>(queries.cols());
  const double scale = spherical ? lambda : 1.0 / std::sqrt(static_cast<double>(dh));
  const bool cutoff_active = angular_cutoff > 0 && angular_cutoff < M_PI;
  const double cutoff_cos = cutoff_active ? std::cos(angular_cutoff) : -2.0;

  Matrix qn = queries, kn = keys;
  if (spherical)
    for (int i = 0; i < n; ++i) {
      qn.row(i) = project_to_sphere(queries.row(i).transpose()).transpose();
      kn.row(i) = project_to_sphere(keys.row(i).transpose()).transpose();
    }

  AttentionResult res;
  res.weights = Matrix::Zero(n, n);
  res.output = Matrix::Zero(n, values.cols());
  for (int i = 0; i < n; ++i) {
    std::vector<int> idx;
    for (int j : mask.row(i)) {
      if (spherical && cutoff_active && j != i && qn.row(i).dot(kn.row(j)) < cutoff_cos)
        continue;
      idx.push_back(j);
    }
    if (idx.empty())
      throw std::runtime_error("model: attention row without allowed entries");
    Vector scores(idx.size());
    for (size_t a = 0; a < idx.size(); ++a)
      scores(static_cast<Eigen::Index>(a)) = scale * qn.row(i).dot(kn.row(idx[a]));
    const double mx = scores.maxCoeff();
    Vector w = (scores.array() - mx).exp();
    w /= w.sum();
    for (size_t a = 0; a < idx.size(); ++a) {
      res.weights(i, idx[a]) = w(static_cast<Eigen::Index>(a));
      res.output.row(i) += w(static_cast<Eigen::Index>(a)) * values.row(idx[a]);
    }
  }
  return res;
}

double loss(const ForwardResult& pred, const WindowBatch& batch, Task task) {
  const int s_count = static_cast<int>(batch.anchors.size());
  if (s_count == 0) throw std::invalid_argument("model: empty batch");
  double total = 0.0;
  if (task != Task::Classification) {
    for (int s = 0; s < s_count; ++s)
      for (Eigen::Index a = 0; a < batch.reg_targets.cols(); ++a) {
        if (!std::isfinite(pred.reg_pred(s, a)))
          throw std::runtime_error("model: NaN prediction at sample " + std::to_string(s));
        const double diff = pred.reg_pred(s, a) - batch.reg_targets(s, a);
        total += diff * diff / (static_cast<double>(s_count) * batch.reg_targets.cols());
      }
  }
  if (task != Task::Regression) {
    for (int s = 0; s < s_count; ++s) {
      if (!std::isfinite(pred.cls_logit(s)))
        throw std::runtime_error("model: NaN logit at sample " + std::to_string(s));
      const int y = batch.cls_labels(s);
      if (y < 0)
        throw std::runtime_error("model: sample " + std::to_string(s) +
                                 " lacks a regime label");
      total += (softplus(pred.cls_logit(s)) - y * pred.cls_logit(s)) / s_count;
    }
  }
  return total;
}

std::optional<double> causal_alignment(const Matrix& weights, const MaskMatrix& sanctioned) {
  if (weights.rows() != weights.cols() || weights.rows() != sanctioned.size())
    throw std::invalid_argument("model: alignment shape mismatch");
  double num = 0.0, den = 0.0;
  for (int i = 0; i < weights.rows(); ++i)
    for (int j = 0; j < weights.cols(); ++j) {
      if (i == j) continue;
      den += weights(i, j);
      if (sanctioned.allowed(i, j)) num += weights(i, j);
    }
  if (!(den > 0)) return std::nullopt;
  return num / den;
}

std::optional<double> causal_alignment(const Matrix& weights, const CausalHypergraph& graph,
                                       const NodeLayout& layout) {
  return causal_alignment(weights, build_sanctioned(graph, layout));
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

namespace {

struct BatchedEval {
  double loss = 0.0;
  AttentionStats stats;
};

BatchedEval evaluate_anchors(const ModelState& state, const SeriesPanel& zpanel,
                             const GraphSchedule& schedule, const IntVector* labels,
                             const std::vector<int>& anchors) {
  BatchedEval out;
  const size_t bs = static_cast<size_t>(state.config.batch_size);
  double weighted = 0.0;
  for (size_t at = 0; at < anchors.size(); at += bs) {
    const size_t hi = std::min(anchors.size(), at + bs);
    std::vector<int> chunk(anchors.begin() + at, anchors.begin() + hi);
    WindowBatch b = assemble_batch(zpanel, state.layout, chunk, schedule, labels, 0.0, nullptr);
    BatchPass pass = run_batch(state, b, schedule, nullptr, &out.stats, nullptr);
    weighted += pass.loss_value * static_cast<double>(chunk.size());
  }
  out.loss = weighted / static_cast<double>(anchors.size());
  return out;
}

}  // namespace

ModelGrads grads_for_batch(const ModelState& state, const WindowBatch& batch,
                           const GraphSchedule& schedule) {
  ModelGrads grads;
  zero_like(state.params, grads.g);
  run_batch(state, batch, schedule, &grads.g, nullptr, nullptr);
  return grads;
}

double loss_for_batch(const ModelState& state, const WindowBatch& batch,
                      const GraphSchedule& schedule) {
  return run_batch(state, batch, schedule, nullptr, nullptr, nullptr).loss_value;
}

TrainResult train(ModelState& state, const SeriesPanel& zpanel,
                  const GraphSchedule& schedule, const IntVector* regime_labels,
                  int train_begin, int train_end, int valid_begin, int valid_end) {
  const auto& cfg = state.config;
  cfg.validate();
  if (cfg.task != Task::Regression && regime_labels == nullptr)
    throw std::invalid_argument("model: classification training needs regime labels");

  auto train_anchors = anchors_for_range(zpanel, cfg.max_lag, train_begin, train_end,
                                         cfg.task, cfg.regime_horizon);
  auto valid_anchors = anchors_for_range(zpanel, cfg.max_lag, valid_begin, valid_end,
                                         cfg.task, cfg.regime_horizon);
  if (train_anchors.empty() || valid_anchors.empty())
    throw std::invalid_argument("model: empty train or valid anchor set");

  Rng shuffle_rng(cfg.seed, "batching");
  Rng noise_rng(cfg.seed, "input-noise");

  // Adam runs on everything except the embedding rows, which take the plain
  // projected-gradient update.
  const long embed_size = state.params.embed.size();
  Vector flat = flatten_params(state.params);
  const long dense_size = flat.size() - embed_size;
  Vector adam_m = Vector::Zero(dense_size);
  Vector adam_v = Vector::Zero(dense_size);
  long adam_t = 0;
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  TrainResult result;
  auto merge_stats = [&](const AttentionStats& s) {
    result.attn.forbidden_mass += s.forbidden_mass;
    result.attn.max_row_sum_dev = std::max(result.attn.max_row_sum_dev, s.max_row_sum_dev);
    result.attn.align_ratio_sum += s.align_ratio_sum;
    result.attn.align_ratio_count += s.align_ratio_count;
    result.attn.align_undefined += s.align_undefined;
  };
  auto log_epoch = [&](int epoch) {
    BatchedEval tr = evaluate_anchors(state, zpanel, schedule, regime_labels, train_anchors);
    BatchedEval va = evaluate_anchors(state, zpanel, schedule, regime_labels, valid_anchors);
    merge_stats(tr.stats);
    merge_stats(va.stats);
    EpochLog row;
    row.epoch = epoch;
    row.train_loss = tr.loss;
    row.valid_loss = va.loss;
    const auto align = va.stats.alignment();
    row.alignment = align ? *align : std::numeric_limits<double>::quiet_NaN();
    result.log.push_back(row);
    return row;
  };

  EpochLog first = log_epoch(0);
  double best_valid = first.valid_loss;
  ModelParams best_params = state.params;
  result.best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<int> order = train_anchors;
    shuffle_rng.shuffle(order.begin(), order.end());
    for (size_t at = 0; at < order.size(); at += cfg.batch_size) {
      const size_t hi = std::min(order.size(), at + cfg.batch_size);
      std::vector<int> chunk(order.begin() + at, order.begin() + hi);
      WindowBatch batch =
          assemble_batch(zpanel, state.layout, chunk, schedule, regime_labels,
                         cfg.input_noise_sigma, cfg.input_noise_sigma > 0 ? &noise_rng : nullptr);
      ModelParams grads;
      zero_like(state.params, grads);
      AttentionStats batch_stats;
      run_batch(state, batch, schedule, &grads, &batch_stats, nullptr);
      merge_stats(batch_stats);

      const Vector flat_g = flatten_params(grads);
      Vector flat_p = flatten_params(state.params);
      ++adam_t;
      const double corr1 = 1.0 - std::pow(b1, static_cast<double>(adam_t));
      const double corr2 = 1.0 - std::pow(b2, static_cast<double>(adam_t));
      for (long i = 0; i < dense_size; ++i) {
        const double g = flat_g(embed_size + i);
        adam_m(i) = b1 * adam_m(i) + (1.0 - b1) * g;
        adam_v(i) = b2 * adam_v(i) + (1.0 - b2) * g * g;
        flat_p(embed_size + i) -=
            cfg.learning_rate * (adam_m(i) / corr1) / (std::sqrt(adam_v(i) / corr2) + eps);
      }
      unflatten_params(state.params, flat_p);
      for (Eigen::Index r = 0; r < state.params.embed.rows(); ++r) {
        const Vector row = state.params.embed.row(r).transpose();
        const Vector grow = grads.embed.row(r).transpose();
        state.params.embed.row(r) =
            riemannian_step(row, grow, cfg.learning_rate).transpose();
      }
    }
    EpochLog row = log_epoch(epoch);
    state.epoch = epoch;
    if (!std::isfinite(row.train_loss) || row.train_loss > kDivergenceBound ||
        !std::isfinite(row.valid_loss)) {
      TrainingDiverged err("model: training diverged at epoch " + std::to_string(epoch) +
                           " (train loss " + std::to_string(row.train_loss) + ")");
      err.log = result.log;
      throw err;
    }
    if (row.valid_loss < best_valid) {
      best_valid = row.valid_loss;
      best_params = state.params;
      result.best_epoch = epoch;
    }
    if (epoch - result.best_epoch >= cfg.patience) break;
  }
  state.params = best_params;
  return result;
}

}  // namespace csht

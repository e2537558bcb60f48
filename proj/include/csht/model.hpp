#pragma once

#include "csht/granger.hpp"
#include "csht/panel.hpp"
#include "csht/sphere.hpp"
#include "csht/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace csht {

enum class Task { Regression, Classification, Both };

Task parse_task(const std::string& s);
const char* task_name(Task t);

struct ModelConfig {
  int layers = 2;
  int hidden_width = 64;
  int heads = 4;
  double lambda = 10.0;  // angular temperature
  double learning_rate = 1e-4;
  int batch_size = 32;
  int max_lag = 5;  // tau, the modelled history depth
  bool use_causal_mask = true;
  bool use_spherical_attention = true;
  uint64_t seed = 42;
  int ffn_width = 128;
  int max_epochs = 100;
  int patience = 10;
  double input_noise_sigma = 0.0;  // Gaussian noise on sentiment/news inputs
  double angular_cutoff = 0.0;     // radians; 0 disables the experimental cutoff
  Task task = Task::Regression;
  int regime_horizon = 3;

  int head_dim() const { return hidden_width / heads; }
  void validate() const;
};

/// Boolean attention constraint over the ordered window nodes.
/// allowed(i, j) is true iff j is a Granger parent of i or j == i.
class MaskMatrix {
 public:
  MaskMatrix() = default;
  explicit MaskMatrix(int n, bool all_allowed);

  int size() const { return n_; }
  bool allowed(int i, int j) const { return dense_[static_cast<size_t>(i) * n_ + j] != 0; }
  const std::vector<int>& row(int i) const { return rows_[i]; }
  void allow(int i, int j);
  void finalize();  // sorts rows, checks every row non-empty

 private:
  int n_ = 0;
  std::vector<uint8_t> dense_;
  std::vector<std::vector<int>> rows_;
};

/// Ordered node window: target nodes (lag 0) first, then every source series
/// at lags 1..tau in panel order.
struct NodeLayout {
  std::vector<LaggedNode> nodes;
  std::vector<int> series_col;       // column in the SeriesPanel
  std::vector<int> target_ordinal;   // -1 for sources
  std::vector<int> target_node;      // node index per target ordinal
  std::vector<std::string> targets;  // asset ids in target order

  int size() const { return static_cast<int>(nodes.size()); }
  int num_targets() const { return static_cast<int>(targets.size()); }

  static NodeLayout build(const SeriesPanel& panel, int tau);
};

/// Re-binds a layout loaded from a checkpoint to a panel's columns; throws
/// when the panel cannot supply a node's series.
void bind_series_columns(NodeLayout& layout, const SeriesPanel& panel);

MaskMatrix build_mask(const CausalHypergraph& graph, const NodeLayout& layout,
                      bool use_causal_mask);
/// Graph-sanctioned cross-node pairs only (no self edges); used by the
/// alignment metric regardless of the mask ablation.
MaskMatrix build_sanctioned(const CausalHypergraph& graph, const NodeLayout& layout);

/// Hypergraph sequence with per-graph masks; a sample uses the last graph
/// whose fitted window covers its anchor date.
struct GraphSchedule {
  std::vector<CausalHypergraph> graphs;
  std::vector<MaskMatrix> masks;
  std::vector<MaskMatrix> sanctioned;

  static GraphSchedule build(std::vector<CausalHypergraph> graphs,
                             const NodeLayout& layout, bool use_causal_mask);
  /// Index of the applicable graph, or -1 when no window covers the date.
  int graph_for_date(const std::string& date) const;
};

struct LayerParams {
  Matrix wq, wk, wv, wo;  // hidden x hidden
  Vector bq, bk, bv, bo;
  Matrix w1;  // ffn x hidden
  Vector b1;
  Matrix w2;  // hidden x ffn
  Vector b2;
};

struct ModelParams {
  Matrix embed;   // nodes x hidden, rows on the unit sphere
  Matrix inject;  // 3 x hidden, per-modality input projection
  std::vector<LayerParams> layers;
  Vector w_reg;
  double b_reg = 0.0;
  Vector w_cls;
  double b_cls = 0.0;
};

Vector flatten_params(const ModelParams& p);
void unflatten_params(ModelParams& p, const Vector& flat);
/// Flat layout: embed, inject, per-layer (wq,bq,wk,bk,wv,bv,wo,bo,w1,b1,w2,b2),
/// then w_reg, b_reg, w_cls, b_cls.
long param_count(const ModelParams& p);
ModelParams zero_params(int nodes, const ModelConfig& config);

struct ModelState {
  ModelConfig config;
  NodeLayout layout;
  ModelParams params;
  int epoch = 0;
};

ModelState init_model(const NodeLayout& layout, const ModelConfig& config);

/// One mini-batch of samples. Anchor t predicts the day-(t+1) targets from
/// features at days t+1-l, l = 1..tau.
struct WindowBatch {
  std::vector<int> anchors;
  Matrix features;     // samples x nodes; target slots carry 0
  Matrix reg_targets;  // samples x targets (z-scored next-day returns)
  IntVector cls_labels;  // -1 where unlabeled
  std::vector<int> graph_index;
};

/// Valid anchors for target days in [rowBegin, rowEnd).
std::vector<int> anchors_for_range(const SeriesPanel& panel, int tau, int row_begin,
                                   int row_end, Task task, int regime_horizon);

WindowBatch assemble_batch(const SeriesPanel& zpanel, const NodeLayout& layout,
                           const std::vector<int>& anchors, const GraphSchedule& schedule,
                           const IntVector* regime_labels, double noise_sigma,
                           Rng* noise_rng);

struct AttentionStats {
  double forbidden_mass = 0.0;
  double max_row_sum_dev = 0.0;
  double align_ratio_sum = 0.0;
  long align_ratio_count = 0;
  long align_undefined = 0;

  /// Mean per-(sample, layer, head) aligned fraction; nullopt when every
  /// instance had zero cross-node mass.
  std::optional<double> alignment() const {
    if (align_ratio_count == 0) return std::nullopt;
    return align_ratio_sum / static_cast<double>(align_ratio_count);
  }
};

/// Dense per-(layer, head) attention rows for one sample, for reports.
struct AttentionCapture {
  Matrix mean_weights;  // nodes x nodes, averaged over layers and heads
};

struct ForwardResult {
  Matrix reg_pred;   // samples x targets
  Vector cls_logit;  // samples
  AttentionStats attn;
};

ForwardResult forward(const ModelState& state, const WindowBatch& batch,
                      const GraphSchedule& schedule, AttentionCapture* capture = nullptr);

/// Standalone masked angular attention over one head's projections.
struct AttentionResult {
  Matrix output;   // rows x dim
  Matrix weights;  // rows x rows, exact zeros where masked
};
AttentionResult masked_attention(const Matrix& queries, const Matrix& keys,
                                 const Matrix& values, const MaskMatrix& mask,
                                 double lambda, bool spherical = true,
                                 double angular_cutoff = 0.0);

/// Mean squared error / binary cross-entropy per the task. Throws on NaN
/// predictions, naming the sample.
double loss(const ForwardResult& pred, const WindowBatch& batch, Task task);

/// Fraction of cross-node attention mass on sanctioned pairs for one dense
/// weight matrix; nullopt when the matrix has no cross-node mass.
std::optional<double> causal_alignment(const Matrix& weights, const MaskMatrix& sanctioned);
std::optional<double> causal_alignment(const Matrix& weights, const CausalHypergraph& graph,
                                       const NodeLayout& layout);

struct ModelGrads {
  ModelParams g;  // same shapes as the parameters
};

/// Analytic gradient of the batch loss for every parameter (embeddings in
/// ambient coordinates).
ModelGrads grads_for_batch(const ModelState& state, const WindowBatch& batch,
                           const GraphSchedule& schedule);
double loss_for_batch(const ModelState& state, const WindowBatch& batch,
                      const GraphSchedule& schedule);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double alignment = 0.0;  // NaN when undefined
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  /// Accumulated over every forward pass of the run, gradient batches included.
  AttentionStats attn;
};

/// Thrown when the loss blows past the divergence bound; carries the log
/// written up to the aborting epoch.
struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
  std::vector<EpochLog> log;
};

/// Projected-gradient training: dense parameters by Adam, embedding rows by
/// riemannian_step, early stopping on validation loss. Aborts (after logging)
/// when the loss exceeds the divergence bound.
TrainResult train(ModelState& state, const SeriesPanel& zpanel,
                  const GraphSchedule& schedule, const IntVector* regime_labels,
                  int train_begin, int train_end, int valid_begin, int valid_end);

inline constexpr double kDivergenceBound = 1e6;

}  // namespace csht

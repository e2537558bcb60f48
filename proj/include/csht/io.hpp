#pragma once

#include "csht/evaluation.hpp"
#include "csht/granger.hpp"
#include "csht/model.hpp"
#include "csht/panel.hpp"
#include "csht/synthetic.hpp"

#include <map>
#include <string>
#include <vector>

namespace csht {

/// Deterministic decimal rendering that round-trips doubles exactly.
std::string format_double(double v);

// --- feature CSVs: first column ISO date, header row carries the ids -------

RawTable read_feature_csv(const std::string& path);
void write_feature_csv(const std::string& path, const RawTable& table);

// --- NormStats: flat key=value audit file -----------------------------------

void write_norm_stats(const std::string& path, const NormStats& stats);
NormStats read_norm_stats(const std::string& path);

// --- hypergraphs -------------------------------------------------------------

/// Human-readable lines:
///   TARGET <id> <- {mod:series:lag, ...} F=<v> p=<v> window=<start>..<end>
void write_hypergraph_text(const std::string& path,
                           const std::vector<CausalHypergraph>& graphs);

/// Machine-readable schedule consumed by the model.
void write_hypergraph_adj(const std::string& path,
                          const std::vector<CausalHypergraph>& graphs);
std::vector<CausalHypergraph> read_hypergraph_adj(const std::string& path);

// --- ground truth edge lists --------------------------------------------------

void write_ground_truth(const std::string& path, const GroundTruthGraph& truth);
GroundTruthGraph read_ground_truth(const std::string& path);

// --- embeddings & checkpoints -------------------------------------------------

/// Text header (node order, dim) followed by little-endian float64 rows.
void write_embedding(const std::string& path, const std::vector<LaggedNode>& nodes,
                     const Matrix& table);
std::pair<std::vector<LaggedNode>, Matrix> read_embedding(const std::string& path);

/// Header (config, node order) + flat little-endian float64 parameter blob.
void write_checkpoint(const std::string& path, const ModelState& state);
ModelState read_checkpoint(const std::string& path);

// --- training log / eval report ------------------------------------------------

void write_training_log(const std::string& path, const std::vector<EpochLog>& log);

void write_eval_report(const std::string& text_path, const std::string& csv_path,
                       const EvalReport& report);

/// Optional per-day metric dump for plotting.
void write_per_day_csv(const std::string& path, const EvalInputs& in,
                       const std::vector<std::string>& dates, Task task, int k);

// --- run configuration -----------------------------------------------------------

/// Flat `key = value` lines under [section] headers; keys address as
/// "section.key". '#' starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_text(const std::string& text);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  void set(const std::string& key, const std::string& value);

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace csht

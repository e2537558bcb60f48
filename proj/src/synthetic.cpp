#include "csht/synthetic.hpp"

#include "csht/calendar.hpp"
#include "csht/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace csht {

namespace {

constexpr int kBurnIn = 100;

std::vector<Matrix> lag_matrices_from(const std::vector<PlantedEdge>& edges, int m,
                                      int max_lag) {
  std::vector<Matrix> mats(max_lag, Matrix::Zero(m, m));
  for (const auto& e : edges) {
    if (e.src < 0 || e.src >= m || e.tgt < 0 || e.tgt >= m)
      throw std::invalid_argument("synthetic: edge references unknown series");
    if (e.lag < 1 || e.lag > max_lag)
      throw std::invalid_argument("synthetic: edge lag outside [1, maxLag]");
    mats[e.lag - 1](e.tgt, e.src) = e.coeff;
  }
  return mats;
}

void check_regime(const std::vector<PlantedEdge>& edges, int m, int max_lag,
                  const char* which) {
  for (const auto& e : edges)
    if (std::fabs(e.coeff) < PlantedSpec::kDetectabilityFloor)
      throw std::invalid_argument(std::string("synthetic: ") + which +
                                  " edge coefficient below detectability floor");
  const double rho = companion_spectral_radius(lag_matrices_from(edges, m, max_lag));
  if (!(rho < 1.0))
    throw std::invalid_argument(std::string("synthetic: ") + which +
                                " coefficients are unstable (spectral radius " +
                                std::to_string(rho) + ")");
}

}  // namespace

void PlantedSpec::validate() const {
  if (series.empty()) throw std::invalid_argument("synthetic: no series declared");
  if (max_lag < 1) throw std::invalid_argument("synthetic: maxLag must be >= 1");
  if (length <= max_lag) throw std::invalid_argument("synthetic: length too short");
  if (noise_stdev.size() != 0 && noise_stdev.size() != num_series())
    throw std::invalid_argument("synthetic: noise stdev count mismatch");
  if (noise_stdev.size() != 0 && (noise_stdev.array() <= 0).any())
    throw std::invalid_argument("synthetic: noise stdev must be positive");
  check_regime(edges, num_series(), max_lag, "pre-break");
  if (shift) {
    if (shift->break_day <= max_lag || shift->break_day >= length)
      throw std::invalid_argument("synthetic: break day outside (maxLag, length)");
    check_regime(shift->edges_after, num_series(), max_lag, "post-break");
  }
}

std::set<std::pair<std::string, std::string>> GroundTruthGraph::active_pairs(
    int from_day, int to_day) const {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& e : edges) {
    if (e.from_day <= from_day && e.to_day >= to_day) {
      const std::string key =
          std::string(modality_name(e.source.modality)) + ":" + e.source.series;
      out.insert({key, e.target});
    }
  }
  return out;
}

double companion_spectral_radius(const std::vector<Matrix>& lag_matrices, double tol) {
  if (lag_matrices.empty()) return 0.0;
  const int m = static_cast<int>(lag_matrices[0].rows());
  const int p = static_cast<int>(lag_matrices.size());
  const int n = m * p;
  Matrix companion = Matrix::Zero(n, n);
  for (int l = 0; l < p; ++l) companion.block(0, l * m, m, m) = lag_matrices[l];
  if (p > 1)
    companion.block(m, 0, m * (p - 1), m * (p - 1)) =
        Matrix::Identity(m * (p - 1), m * (p - 1));

  // Growth-rate power iteration: the geometric mean of ||C x_k|| converges to
  // the spectral radius even when the dominant eigenvalues form a complex
  // pair. A vanishing iterate means a (numerically) nilpotent companion.
  Vector x = Vector::Ones(n);
  for (int i = 0; i < n; ++i) x(i) += 1e-3 * (i + 1) / n;
  x.normalize();
  double estimate = 0.0;
  double log_acc = 0.0;
  int acc_count = 0;
  constexpr int kMaxIter = 2000;
  constexpr int kWindow = 50;
  for (int it = 1; it <= kMaxIter; ++it) {
    Vector y = companion * x;
    const double g = y.norm();
    if (g < 1e-300) return 0.0;
    x = y / g;
    log_acc += std::log(g);
    ++acc_count;
    if (acc_count == kWindow) {
      const double next = std::exp(log_acc / kWindow);
      if (it > kWindow && std::fabs(next - estimate) < tol * std::max(1.0, next))
        return next;
      estimate = next;
      log_acc = 0.0;
      acc_count = 0;
    }
  }
  return estimate;
}

std::pair<SeriesPanel, GroundTruthGraph> gen_var_process(const PlantedSpec& spec) {
  spec.validate();
  const int m = spec.num_series();
  const int p = spec.max_lag;
  const auto pre = lag_matrices_from(spec.edges, m, p);
  const auto post = spec.shift ? lag_matrices_from(spec.shift->edges_after, m, p) : pre;
  Vector noise = spec.noise_stdev.size() ? spec.noise_stdev : Vector::Ones(m);

  Rng rng(spec.seed, "var-noise");
  const int total = kBurnIn + spec.length;
  Matrix y(total, m);
  for (int t = 0; t < total; ++t) {
    const int day = t - kBurnIn;  // panel row index once burn-in is dropped
    const auto& mats = (spec.shift && day >= spec.shift->break_day) ? post : pre;
    Vector row = Vector::Zero(m);
    for (int l = 1; l <= p; ++l)
      if (t - l >= 0) row += mats[l - 1] * y.row(t - l).transpose();
    for (int i = 0; i < m; ++i) row(i) += noise(i) * rng.gaussian();
    y.row(t) = row.transpose();
  }

  SeriesPanel panel;
  panel.series = spec.series;
  panel.values = y.bottomRows(spec.length);
  panel.dates = trading_days_from(spec.start_date, spec.length);

  GroundTruthGraph truth;
  auto add_edges = [&](const std::vector<PlantedEdge>& edges, int from, int to) {
    for (const auto& e : edges) {
      GroundTruthEdge g;
      g.source = {spec.series[e.src].modality, spec.series[e.src].id, e.lag};
      g.target = spec.series[e.tgt].id;
      g.coeff = e.coeff;
      g.from_day = from;
      g.to_day = to;
      truth.edges.push_back(g);
    }
  };
  if (spec.shift) {
    add_edges(spec.edges, 0, spec.shift->break_day);
    add_edges(spec.shift->edges_after, spec.shift->break_day, spec.length);
  } else {
    add_edges(spec.edges, 0, spec.length);
  }
  return {panel, truth};
}

PlantedSpec plant_regime_shift(const PlantedSpec& spec, int break_day,
                               std::vector<PlantedEdge> edges_after) {
  PlantedSpec out = spec;
  out.shift = RegimeShift{break_day, std::move(edges_after)};
  out.validate();
  return out;
}

PlantedSpec make_asset_spec(int assets, int news_assets, bool with_index, int length,
                            uint64_t seed) {
  if (assets < 1 || news_assets > assets)
    throw std::invalid_argument("synthetic: bad asset counts");
  PlantedSpec spec;
  for (int i = 0; i < assets; ++i)
    spec.series.push_back({Modality::Return, "A" + std::to_string(i), true});
  for (int i = 0; i < assets; ++i)
    spec.series.push_back({Modality::Sentiment, "A" + std::to_string(i), false});
  for (int i = 0; i < news_assets; ++i)
    spec.series.push_back({Modality::News, "A" + std::to_string(i), false});
  if (with_index) spec.series.push_back({Modality::Return, "INDEX", false});
  spec.length = length;
  spec.seed = seed;
  return spec;
}

int find_series(const std::vector<SeriesInfo>& series, Modality m, const std::string& id) {
  for (size_t i = 0; i < series.size(); ++i)
    if (series[i].modality == m && series[i].id == id) return static_cast<int>(i);
  return -1;
}

}  // namespace csht

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace csht {

using Scalar = double;

template <class S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Matrix = MatrixX<Scalar>;
using Vector = VectorX<Scalar>;
using IntVector = VectorX<int>;

/// Variable modality of a hypergraph node.
enum class Modality { Return, Sentiment, News };

inline const char* modality_name(Modality m) {
  switch (m) {
    case Modality::Return: return "ret";
    case Modality::Sentiment: return "sent";
    case Modality::News: return "news";
  }
  throw std::logic_error("types: unknown modality");
}

Modality parse_modality(const std::string& s);

/// One time-shifted variable: (modality, series id, lag in days).
/// Sources carry lag >= 1; prediction targets sit at lag 0.
struct LaggedNode {
  Modality modality = Modality::Return;
  std::string series;
  int lag = 0;

  bool operator==(const LaggedNode& o) const {
    return modality == o.modality && series == o.series && lag == o.lag;
  }
  bool operator<(const LaggedNode& o) const {
    if (modality != o.modality) return modality < o.modality;
    if (series != o.series) return series < o.series;
    return lag < o.lag;
  }

  std::string str() const {
    return std::string(modality_name(modality)) + ":" + series + ":" +
           std::to_string(lag);
  }
};

LaggedNode parse_lagged_node(const std::string& text);

struct LaggedNodeHash {
  size_t operator()(const LaggedNode& n) const {
    size_t h = std::hash<std::string>()(n.series);
    h ^= std::hash<int>()(n.lag) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<int>()(static_cast<int>(n.modality)) + (h << 6) + (h >> 2);
    return h;
  }
};

}  // namespace csht

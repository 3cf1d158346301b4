#include "espn/protonet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "espn/error.hpp"

namespace espn {

std::string_view metric_name(Metric m) noexcept {
  return m == Metric::cosine ? "cosine" : "euclidean";
}

Metric parse_metric(std::string_view name) {
  if (name == "euclidean") return Metric::euclidean;
  if (name == "cosine") return Metric::cosine;
  throw ConfigError("unknown metric '" + std::string(name) + "' (euclidean|cosine)");
}

PrototypeSet compute_prototypes(const Matrix& support, std::span<const int> labels,
                                std::size_t way, Metric metric) {
  if (labels.size() != support.rows()) {
    throw ShapeError("prototypes", "label count does not match support rows");
  }
  const std::size_t dim = support.cols();
  std::vector<double> sums(way * dim, 0.0);
  std::vector<std::size_t> counts(way, 0);
  for (std::size_t r = 0; r < support.rows(); ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= way) {
      throw MissingClassError("support label " + std::to_string(label) + " outside [0, " +
                              std::to_string(way) + ")");
    }
    const auto row = support.row(r);
    double* acc = sums.data() + static_cast<std::size_t>(label) * dim;
    for (std::size_t j = 0; j < dim; ++j) acc[j] += row[j];
    ++counts[static_cast<std::size_t>(label)];
  }
  PrototypeSet out{Matrix(way, dim), way, metric};
  for (std::size_t k = 0; k < way; ++k) {
    if (counts[k] == 0) {
      throw MissingClassError("class " + std::to_string(k) + " has no support examples");
    }
    for (std::size_t j = 0; j < dim; ++j) {
      out.prototypes(k, j) = static_cast<float>(sums[k * dim + j] / counts[k]);
    }
  }
  return out;
}

double similarity(std::span<const float> query, std::span<const float> prototype,
                  Metric metric) {
  if (query.size() != prototype.size()) {
    throw ShapeError("similarity", "vector lengths differ");
  }
  if (metric == Metric::euclidean) {
    double d = 0.0;
    for (std::size_t j = 0; j < query.size(); ++j) {
      const double diff = static_cast<double>(query[j]) - prototype[j];
      d += diff * diff;
    }
    return -d;
  }
  double dot = 0.0, qq = 0.0, pp = 0.0;
  for (std::size_t j = 0; j < query.size(); ++j) {
    dot += static_cast<double>(query[j]) * prototype[j];
    qq += static_cast<double>(query[j]) * query[j];
    pp += static_cast<double>(prototype[j]) * prototype[j];
  }
  if (qq == 0.0 || pp == 0.0) {
    throw DegenerateVectorError("cosine similarity with a zero vector");
  }
  return dot / (std::sqrt(qq) * std::sqrt(pp));
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

EpisodeResult score_queries(const PrototypeSet& protos, const Matrix& queries,
                            std::span<const int> labels) {
  if (labels.size() != queries.rows()) {
    throw ShapeError("queries", "label count does not match query rows");
  }
  if (queries.cols() != protos.prototypes.cols()) {
    throw ShapeError("queries", "embedding width differs from prototypes");
  }
  const std::size_t way = protos.way;
  EpisodeResult res;
  res.classes = way;
  res.probs.resize(queries.rows() * way);
  std::vector<double> sims(way);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    for (std::size_t k = 0; k < way; ++k) {
      sims[k] = similarity(queries.row(q), protos.prototypes.row(k), protos.metric);
    }
    const double m = *std::max_element(sims.begin(), sims.end());
    double z = 0.0;
    for (std::size_t k = 0; k < way; ++k) z += std::exp(sims[k] - m);
    const double log_z = m + std::log(z);
    for (std::size_t k = 0; k < way; ++k) res.probs[q * way + k] = std::exp(sims[k] - log_z);
    const auto label = static_cast<std::size_t>(labels[q]);
    loss += log_z - sims[label];
    // max_element returns the first maximum: ties resolve to the lowest index.
    const auto best = static_cast<std::size_t>(
        std::max_element(sims.begin(), sims.end()) - sims.begin());
    if (best == label) ++correct;
  }
  if (queries.rows() > 0) {
    res.loss = loss / static_cast<double>(queries.rows());
    res.accuracy = static_cast<double>(correct) / static_cast<double>(queries.rows());
  }
  return res;
}

EpisodeResult episode_loss(const ParamVector& params, const EmbeddingNet& net,
                           const Episode& ep, Metric metric) {
  return episode_loss(params, net, ep, Tensor4::concat(ep.support, ep.query), metric);
}

EpisodeResult episode_loss(const ParamVector& params, const EmbeddingNet& net,
                           const Episode& ep, const Tensor4& batch, Metric metric) {
  const std::size_t n_support = ep.support.dims().batch;
  const std::size_t n_query = ep.query.dims().batch;
  if (batch.dims().batch != n_support + n_query) {
    throw ShapeError("episode", "joint batch size does not equal support + query");
  }
  const Matrix emb = embed(net, params, batch);
  const std::size_t dc = emb.cols();
  const auto all = emb.data();
  Matrix support(n_support, dc,
                 std::vector<float>(all.begin(), all.begin() + n_support * dc));
  Matrix query(n_query, dc, std::vector<float>(all.begin() + n_support * dc, all.end()));
  const PrototypeSet protos = compute_prototypes(support, ep.support_labels, ep.way, metric);
  return score_queries(protos, query, ep.query_labels);
}

}  // namespace espn

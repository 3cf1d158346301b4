#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "espn/episodes.hpp"
#include "espn/nncore.hpp"
#include "espn/params.hpp"
#include "espn/tensor.hpp"

namespace espn {

enum class Metric { euclidean, cosine };

std::string_view metric_name(Metric m) noexcept;
Metric parse_metric(std::string_view name);

struct PrototypeSet {
  Matrix prototypes;  // way x D_c
  std::size_t way = 0;
  Metric metric = Metric::euclidean;
};

struct EpisodeResult {
  double loss = 0.0;      // mean cross-entropy over queries, nats
  double accuracy = 0.0;  // fraction of queries whose argmax is correct
  std::size_t classes = 0;
  std::vector<double> probs;  // queries x classes, row-major

  std::span<const double> row(std::size_t q) const noexcept {
    return {probs.data() + q * classes, classes};
  }
};

/// Row k is the mean of the support rows labelled k. Throws
/// MissingClassError if a label in [0, way) has no rows.
PrototypeSet compute_prototypes(const Matrix& support, std::span<const int> labels,
                                std::size_t way, Metric metric = Metric::euclidean);

/// Euclidean: -||q - p||^2. Cosine: q.p / (|q||p|); throws
/// DegenerateVectorError on a zero vector.
double similarity(std::span<const float> query, std::span<const float> prototype,
                  Metric metric);

/// Stable softmax (max-subtracted) of one row of similarities.
std::vector<double> softmax(std::span<const double> logits);

/// Scores embedded queries against prototypes. Ties in the argmax go to the
/// lowest class index.
EpisodeResult score_queries(const PrototypeSet& protos, const Matrix& queries,
                            std::span<const int> labels);

/// Embeds support and query as one batch (shared batch-norm statistics),
/// then prototypes, softmax over similarities and mean cross-entropy.
/// Fitness for ES is -loss.
EpisodeResult episode_loss(const ParamVector& params, const EmbeddingNet& net,
                           const Episode& ep, Metric metric);

/// Same as above with support and query already stacked into `batch`.
EpisodeResult episode_loss(const ParamVector& params, const EmbeddingNet& net,
                           const Episode& ep, const Tensor4& batch, Metric metric);

}  // namespace espn

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "espn/params.hpp"

namespace espn {

enum class Estimator { wsr, finite_diff, nes };

std::string_view estimator_name(Estimator e) noexcept;
Estimator parse_estimator(std::string_view name);

inline constexpr double kRewardStdGuard = 1e-8;
inline constexpr double kDefaultSigmaFD = 1e-3;

struct ESConfig {
  double alpha = 1.0;
  double sigma = 0.01;
  std::size_t pop_per_worker = 32;
  std::size_t workers = 8;
  Estimator estimator = Estimator::wsr;
  std::uint64_t seed = 0;
  double sigma_fd = kDefaultSigmaFD;

  /// n = pop_per_worker * workers.
  std::size_t population() const noexcept { return pop_per_worker * workers; }
  /// Throws ConfigError on non-positive sizes or step parameters.
  void validate() const;
};

/// Candidate i is mu + row(i).
struct Population {
  std::size_t size = 0;
  std::size_t dim = 0;
  std::uint64_t step = 0;
  std::vector<float> displacements;  // size x dim, row-major
  std::vector<std::uint64_t> candidate_seeds;
  std::vector<double> rewards;

  std::span<float> row(std::size_t i) noexcept { return {displacements.data() + i * dim, dim}; }
  std::span<const float> row(std::size_t i) const noexcept {
    return {displacements.data() + i * dim, dim};
  }
};

struct GradientEstimate {
  std::vector<double> grad;
  Estimator estimator = Estimator::wsr;
  std::size_t population_size_used = 0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  bool degenerate = false;  // reward std fell under the guard; grad is zero

  double norm() const noexcept;
};

using FitnessFn = std::function<double(std::span<const float>)>;

/// Runs body(i) for i in [0, count), possibly concurrently.
using ParallelFor = std::function<void(std::size_t count, const std::function<void(std::size_t)>&)>;

/// Key of candidate `index` at `step`; the row depends on nothing else.
std::uint64_t candidate_seed(std::uint64_t seed, std::uint64_t step, std::uint64_t index) noexcept;

/// Writes epsilon_i ~ N(0, sigma^2 I) for one candidate into `out`.
void sample_displacement(std::uint64_t seed, std::uint64_t step, std::uint64_t index,
                         double sigma, std::span<float> out) noexcept;

/// Allocates a population of cfg.population() rows and fills every row.
/// mu is only read for its dimension.
Population sample_population(const ParamVector& mu, const ESConfig& cfg, std::uint64_t step);

/// Same shape as sample_population but rows left unsampled; workers fill
/// their own shard with fill_rows.
Population allocate_population(std::size_t dim, const ESConfig& cfg, std::uint64_t step);
void fill_rows(Population& pop, const ESConfig& cfg, std::size_t begin, std::size_t end);

/// mu + row(i) into `out`.
void candidate_params(std::span<const float> mu, const Population& pop, std::size_t i,
                      std::span<float> out) noexcept;

/// Serial evaluation helper for synthetic objectives.
void evaluate_population(const ParamVector& mu, Population& pop, const FitnessFn& fitness);

/// Weighted standardized rewards:
///   grad = (1/n) sum_i (F_i - mean F) / std F * eps_i
/// with the population standard deviation. Summation runs in candidate order.
GradientEstimate wsr_gradient(const Population& pop, const ESConfig& cfg);

/// WSR restricted to candidates [begin, end); mean and std are local.
GradientEstimate wsr_gradient(const Population& pop, std::size_t begin, std::size_t end);

/// Log-likelihood estimator for an isotropic Gaussian:
///   grad = (1/n) sum_i F_i * eps_i / sigma^2.
GradientEstimate nes_gradient(const Population& pop, const ESConfig& cfg);

/// Forward differences cast as a population of D+1 candidates: the
/// unperturbed mean plus one candidate per coordinate nudged by sigma_fd.
/// grad_j = (F(mu + sigma_fd e_j) - F(mu)) / sigma_fd, without a 1/n factor.
/// Throws NumericalError naming the parameter if a probe is not finite.
GradientEstimate fd_gradient(const ParamVector& mu, const FitnessFn& fitness,
                             double sigma_fd = kDefaultSigmaFD,
                             const ParallelFor& parallel = {});

/// mu' = mu + alpha * grad (ascent on fitness, i.e. descent on the loss).
/// Throws UpdateError without touching anything if the result is not finite.
ParamVector apply_update(const ParamVector& mu, const GradientEstimate& grad, double alpha);

}  // namespace espn

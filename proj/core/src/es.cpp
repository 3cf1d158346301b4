#include "espn/es.hpp"

#include <cmath>
#include <limits>

#include "espn/error.hpp"
#include "espn/rng.hpp"

namespace espn {

std::string_view estimator_name(Estimator e) noexcept {
  switch (e) {
    case Estimator::wsr: return "wsr";
    case Estimator::finite_diff: return "finite_diff";
    case Estimator::nes: return "nes";
  }
  return "?";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "wsr") return Estimator::wsr;
  if (name == "finite_diff" || name == "fd") return Estimator::finite_diff;
  if (name == "nes") return Estimator::nes;
  throw ConfigError("unknown estimator '" + std::string(name) + "' (wsr|finite_diff|nes)");
}

void ESConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be > 0");
  if (!(sigma_fd > 0.0)) throw ConfigError("sigma_fd must be > 0");
  if (pop_per_worker == 0) throw ConfigError("pop_per_worker must be positive");
  if (workers == 0) throw ConfigError("workers must be positive");
}

double GradientEstimate::norm() const noexcept {
  double s = 0.0;
  for (const double g : grad) s += g * g;
  return std::sqrt(s);
}

std::uint64_t candidate_seed(std::uint64_t seed, std::uint64_t step, std::uint64_t index) noexcept {
  return derive_seed(seed, "es.candidate", step, index);
}

void sample_displacement(std::uint64_t seed, std::uint64_t step, std::uint64_t index,
                         double sigma, std::span<float> out) noexcept {
  fill_gaussian(candidate_seed(seed, step, index), 0u, static_cast<float>(sigma), out);
}

Population allocate_population(std::size_t dim, const ESConfig& cfg, std::uint64_t step) {
  cfg.validate();
  Population pop;
  pop.size = cfg.population();
  pop.dim = dim;
  pop.step = step;
  pop.displacements.assign(pop.size * dim, 0.0f);
  pop.candidate_seeds.resize(pop.size);
  for (std::size_t i = 0; i < pop.size; ++i) pop.candidate_seeds[i] = candidate_seed(cfg.seed, step, i);
  pop.rewards.assign(pop.size, std::numeric_limits<double>::quiet_NaN());
  return pop;
}

void fill_rows(Population& pop, const ESConfig& cfg, std::size_t begin, std::size_t end) {
  for (std::size_t i = begin; i < end; ++i) {
    sample_displacement(cfg.seed, pop.step, i, cfg.sigma, pop.row(i));
  }
}

Population sample_population(const ParamVector& mu, const ESConfig& cfg, std::uint64_t step) {
  Population pop = allocate_population(mu.size(), cfg, step);
  fill_rows(pop, cfg, 0, pop.size);
  return pop;
}

void candidate_params(std::span<const float> mu, const Population& pop, std::size_t i,
                      std::span<float> out) noexcept {
  const auto eps = pop.row(i);
  for (std::size_t j = 0; j < mu.size(); ++j) out[j] = mu[j] + eps[j];
}

void evaluate_population(const ParamVector& mu, Population& pop, const FitnessFn& fitness) {
  std::vector<float> x(mu.size());
  for (std::size_t i = 0; i < pop.size; ++i) {
    candidate_params(mu.values(), pop, i, x);
    pop.rewards[i] = fitness(x);
  }
}

GradientEstimate wsr_gradient(const Population& pop, std::size_t begin, std::size_t end) {
  GradientEstimate out;
  out.estimator = Estimator::wsr;
  out.grad.assign(pop.dim, 0.0);
  const std::size_t n = end - begin;
  out.population_size_used = n;
  if (n == 0) {
    out.degenerate = true;
    return out;
  }
  double mean = 0.0;
  for (std::size_t i = begin; i < end; ++i) mean += pop.rewards[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double d = pop.rewards[i] - mean;
    var += d * d;
  }
  const double sd = std::sqrt(var / static_cast<double>(n));
  out.reward_mean = mean;
  out.reward_std = sd;
  if (!(sd >= kRewardStdGuard)) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = begin; i < end; ++i) {
    const double w = (pop.rewards[i] - mean) / sd;
    const auto eps = pop.row(i);
    for (std::size_t j = 0; j < pop.dim; ++j) out.grad[j] += w * eps[j];
  }
  for (double& g : out.grad) g /= static_cast<double>(n);
  return out;
}

GradientEstimate wsr_gradient(const Population& pop, const ESConfig&) {
  return wsr_gradient(pop, 0, pop.size);
}

GradientEstimate nes_gradient(const Population& pop, const ESConfig& cfg) {
  GradientEstimate out;
  out.estimator = Estimator::nes;
  out.grad.assign(pop.dim, 0.0);
  out.population_size_used = pop.size;
  if (pop.size == 0) return out;
  double mean = 0.0, sq = 0.0;
  for (const double r : pop.rewards) mean += r;
  mean /= static_cast<double>(pop.size);
  for (const double r : pop.rewards) sq += (r - mean) * (r - mean);
  out.reward_mean = mean;
  out.reward_std = std::sqrt(sq / static_cast<double>(pop.size));

  const double inv_var = 1.0 / (cfg.sigma * cfg.sigma);
  for (std::size_t i = 0; i < pop.size; ++i) {
    const double w = pop.rewards[i] * inv_var;
    const auto eps = pop.row(i);
    for (std::size_t j = 0; j < pop.dim; ++j) out.grad[j] += w * eps[j];
  }
  for (double& g : out.grad) g /= static_cast<double>(pop.size);
  return out;
}

GradientEstimate fd_gradient(const ParamVector& mu, const FitnessFn& fitness, double sigma_fd,
                             const ParallelFor& parallel) {
  if (!(sigma_fd > 0.0)) throw ConfigError("sigma_fd must be > 0");
  const std::size_t dim = mu.size();
  // Candidate 0 is mu itself; candidate j+1 nudges coordinate j. The divisor
  // is the step actually representable in float, which equals sigma_fd up to
  // rounding of mu_j + sigma_fd.
  std::vector<double> rewards(dim + 1);
  std::vector<double> step(dim);
  const auto probe = [&](std::size_t c) {
    std::vector<float> x(mu.values().begin(), mu.values().end());
    if (c > 0) {
      const float before = x[c - 1];
      x[c - 1] = static_cast<float>(before + sigma_fd);
      step[c - 1] = static_cast<double>(x[c - 1]) - before;
    }
    rewards[c] = fitness(x);
  };
  if (parallel) {
    parallel(dim + 1, probe);
  } else {
    for (std::size_t c = 0; c <= dim; ++c) probe(c);
  }
  for (std::size_t c = 0; c <= dim; ++c) {
    if (!std::isfinite(rewards[c])) {
      throw NumericalError(c == 0 ? "non-finite fitness at the mean candidate"
                                  : "non-finite fitness probing parameter " + std::to_string(c - 1),
                           c == 0 ? dim : c - 1);
    }
  }

  GradientEstimate out;
  out.estimator = Estimator::finite_diff;
  out.population_size_used = dim + 1;
  out.reward_mean = rewards[0];
  out.reward_std = sigma_fd;
  out.grad.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    if (step[j] == 0.0) {
      throw NumericalError("sigma_fd vanishes in float at parameter " + std::to_string(j), j);
    }
    out.grad[j] = (rewards[j + 1] - rewards[0]) / step[j];
  }
  return out;
}

ParamVector apply_update(const ParamVector& mu, const GradientEstimate& grad, double alpha) {
  if (grad.grad.size() != mu.size()) {
    throw ParamSizeError("gradient has " + std::to_string(grad.grad.size()) +
                         " entries, parameters have " + std::to_string(mu.size()));
  }
  std::vector<float> next(mu.size());
  const auto v = mu.values();
  for (std::size_t j = 0; j < next.size(); ++j) {
    next[j] = static_cast<float>(v[j] + alpha * grad.grad[j]);
    if (!std::isfinite(next[j])) {
      throw UpdateError("update produced a non-finite value at parameter " + std::to_string(j));
    }
  }
  return mu.with_values(std::move(next));
}

}  // namespace espn

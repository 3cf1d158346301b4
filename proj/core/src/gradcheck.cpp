#include "espn/gradcheck.hpp"

#include <cmath>
#include <cstdio>

#include "espn/es.hpp"
#include "espn/rng.hpp"

namespace espn::gradcheck {
namespace {

// F(z) = -(z - z*)' A (z - z*), A = B B' / d + 0.5 I.
struct Quadratic {
  std::size_t dim;
  std::vector<double> a;  // dim x dim
  std::vector<double> opt;

  Quadratic(std::size_t d, std::uint64_t seed) : dim(d), a(d * d), opt(d) {
    CounterRng rng(derive_seed(seed, "gradcheck.quadratic"));
    std::vector<double> b(d * d);
    for (auto& v : b) v = rng.normal();
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) s += b[i * d + k] * b[j * d + k];
        a[i * d + j] = s / static_cast<double>(d) + (i == j ? 0.5 : 0.0);
      }
    }
    for (auto& v : opt) v = rng.normal();
  }

  double operator()(std::span<const float> z) const {
    double f = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < dim; ++j) row += a[i * dim + j] * (z[j] - opt[j]);
      f += (z[i] - opt[i]) * row;
    }
    return -f;
  }

  std::vector<double> gradient(std::span<const float> z) const {
    std::vector<double> g(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < dim; ++j) row += a[i * dim + j] * (z[j] - opt[j]);
      g[i] = -2.0 * row;
    }
    return g;
  }
};

double cosine(const std::vector<double>& x, const std::vector<double>& y) {
  double d = 0, xx = 0, yy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d += x[i] * y[i];
    xx += x[i] * x[i];
    yy += y[i] * y[i];
  }
  return d / std::sqrt(xx * yy);
}

double rel_l2(const std::vector<double>& x, const std::vector<double>& ref) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - ref[i]) * (x[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return std::sqrt(num / den);
}

ParamVector random_point(std::size_t dim, std::uint64_t seed) {
  ParamVector mu = ParamVector::flat(dim);
  CounterRng rng(derive_seed(seed, "gradcheck.mu"));
  for (float& v : mu.values()) v = static_cast<float>(rng.normal());
  return mu;
}

}  // namespace

std::vector<CheckResult> run_all(std::uint64_t seed) {
  std::vector<CheckResult> out;
  char buf[160];

  {
    const Quadratic q(50, seed);
    const ParamVector mu = random_point(50, seed);
    const auto est = fd_gradient(mu, [&](std::span<const float> z) { return q(z); }, 1e-3);
    const double err = rel_l2(est.grad, q.gradient(mu.values()));
    out.push_back({"fd_quadratic_d50", err < 1e-2, err, 1e-2, "relative L2 error, sigma_fd=0.001"});
  }
  {
    const Quadratic q(50, seed);
    const ParamVector mu = random_point(50, seed);
    ESConfig cfg;
    cfg.sigma = 0.05;
    cfg.workers = 1;
    cfg.pop_per_worker = 4096;
    cfg.seed = seed;
    Population pop = sample_population(mu, cfg, 0);
    evaluate_population(mu, pop, [&](std::span<const float> z) { return q(z); });
    const double c = cosine(wsr_gradient(pop, cfg).grad, q.gradient(mu.values()));
    out.push_back({"wsr_quadratic_d50", c > 0.9, c, 0.9, "cosine vs closed form, n=4096 sigma=0.05"});
  }
  {
    const std::size_t dim = 10;
    std::vector<double> slope(dim);
    CounterRng rng(derive_seed(seed, "gradcheck.slope"));
    for (auto& v : slope) v = rng.normal();
    const auto linear = [&](std::span<const float> z) {
      double f = 0;
      for (std::size_t j = 0; j < dim; ++j) f += slope[j] * z[j];
      return f;
    };
    const ParamVector mu = ParamVector::flat(dim);
    ESConfig cfg;
    cfg.sigma = 0.1;
    cfg.workers = 1;
    cfg.pop_per_worker = 10000;
    cfg.seed = seed;
    Population pop = sample_population(mu, cfg, 0);
    evaluate_population(mu, pop, linear);
    const double c = cosine(wsr_gradient(pop, cfg).grad, slope);
    out.push_back({"wsr_linear_d10", c > 0.99, c, 0.99, "cosine vs slope, n=10^4"});

    cfg.pop_per_worker = 100000;
    Population big = sample_population(mu, cfg, 1);
    evaluate_population(mu, big, linear);
    const auto nes = nes_gradient(big, cfg);
    double worst = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      double m = 0, s2 = 0;
      const double inv = 1.0 / (cfg.sigma * cfg.sigma);
      for (std::size_t i = 0; i < big.size; ++i) m += big.rewards[i] * big.row(i)[j] * inv;
      m /= static_cast<double>(big.size);
      for (std::size_t i = 0; i < big.size; ++i) {
        const double t = big.rewards[i] * big.row(i)[j] * inv - m;
        s2 += t * t;
      }
      const double se = std::sqrt(s2 / static_cast<double>(big.size - 1)) /
                        std::sqrt(static_cast<double>(big.size));
      worst = std::max(worst, std::abs(nes.grad[j] - slope[j]) / se);
    }
    out.push_back({"nes_linear_slope", worst < 3.0, worst, 3.0,
                   "max |grad_j - a_j| in standard errors, n=10^5"});
  }
  {
    ParamVector mu = ParamVector::flat(2);
    mu.values()[0] = 1.0f;
    const auto est = fd_gradient(mu, [](std::span<const float> z) {
      return -(static_cast<double>(z[0]) * z[0] + static_cast<double>(z[1]) * z[1]);
    });
    const double err = std::max(std::abs(est.grad[0] + 2.001), std::abs(est.grad[1] + 0.001));
    std::snprintf(buf, sizeof buf, "grad = (%.6f, %.6f), expected (-2.001, -0.001)", est.grad[0],
                  est.grad[1]);
    out.push_back({"fd_neg_norm_sq", err < 1e-6, err, 1e-6, buf});
  }
  {
    const Quadratic q(20, seed);
    const ParamVector mu = random_point(20, seed);
    ESConfig cfg;
    cfg.sigma = 0.05;
    cfg.workers = 1;
    cfg.pop_per_worker = 256;
    cfg.seed = seed;
    Population pop = sample_population(mu, cfg, 0);
    evaluate_population(mu, pop, [&](std::span<const float> z) { return q(z); });
    const auto g1 = wsr_gradient(pop, cfg).grad;
    for (auto& r : pop.rewards) r = 3.5 * r - 12.0;
    const auto g2 = wsr_gradient(pop, cfg).grad;
    const double err = rel_l2(g2, g1);
    out.push_back({"wsr_affine_invariance", err < 1e-6, err, 1e-6, "rewards -> 3.5 F - 12"});

    for (auto& r : pop.rewards) r = 0.25;
    const auto flat = wsr_gradient(pop, cfg);
    double norm = 0.0;
    bool finite = true;
    for (double v : flat.grad) {
      norm += v * v;
      finite = finite && std::isfinite(v);
    }
    out.push_back({"wsr_zero_variance", finite && norm == 0.0 && flat.degenerate, std::sqrt(norm),
                   0.0, "all rewards equal -> zero gradient, flagged"});
  }
  return out;
}

}  // namespace espn::gradcheck

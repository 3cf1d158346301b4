#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "espn/rng.hpp"

namespace espn::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("espn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<float> gaussian(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(scale * rng.normal());
  return v;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  double d = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return d / std::sqrt(aa * bb);
}

}  // namespace espn::testing

namespace espn::testing {

// f(z) = -(z - z*)^T A (z - z*), A = B B^T / d + I / 2.
struct Quadratic {
  std::size_t d;
  std::vector<double> a;  // d x d
  std::vector<double> opt;

  Quadratic(std::size_t dim, std::uint64_t seed) : d(dim), a(dim * dim, 0.0), opt(dim) {
    CounterRng rng(seed);
    std::vector<double> b(d * d);
    for (auto& x : b) x = rng.normal();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0;
        for (std::size_t k = 0; k < d; ++k) s += b[i * d + k] * b[j * d + k];
        a[i * d + j] = s / double(d) + (i == j ? 0.5 : 0.0);
      }
    for (auto& x : opt) x = rng.normal();
  }

  double operator()(std::span<const float> z) const {
    double s = 0;
    for (std::size_t i = 0; i < d; ++i) {
      double r = 0;
      for (std::size_t j = 0; j < d; ++j) r += a[i * d + j] * (z[j] - opt[j]);
      s += (z[i] - opt[i]) * r;
    }
    return -s;
  }

  std::vector<double> grad(std::span<const float> z) const {
    std::vector<double> g(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) g[i] -= 2.0 * a[i * d + j] * (z[j] - opt[j]);
    return g;
  }
};

}  // namespace espn::testing

#include "espn/config.hpp"
#include "espn/synthetic.hpp"

namespace espn::testing {

inline Dataset synthetic_dataset(std::uint64_t seed, std::size_t train = 40, std::size_t val = 15,
                                 std::size_t test = 15) {
  return Dataset{synthetic::make_table(Split::train, train, seed, 0),
                 synthetic::make_table(Split::validation, val, seed, std::uint32_t(train)),
                 synthetic::make_table(Split::test, test, seed, std::uint32_t(train + val))};
}

// Tiny run that finishes in well under a second per epoch.
inline RunConfig tiny_config(const std::filesystem::path& out) {
  RunConfig c;
  c.channels = 4;
  c.train_way = 3;
  c.test_way = 3;
  c.shot = 1;
  c.query = 2;
  c.eval_query = 2;
  c.epochs = 3;
  c.episodes_per_epoch = 3;
  c.val_episodes_per_epoch = 1;
  c.test_episodes = 6;
  c.es.workers = 2;
  c.es.pop_per_worker = 4;
  c.es.sigma = 0.01;
  c.es.alpha = 1.0;
  c.threads = 2;
  c.seed = 5;
  c.output_dir = out;
  return c;
}

// Spearman rank correlation; ties get average ranks.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * double(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// One-sided p-value for rho < 0 via the t approximation.
inline double spearman_p_negative(double rho, std::size_t n) {
  const double t = rho * std::sqrt((double(n) - 2) / (1 - rho * rho));
  return 0.5 * std::erfc(-t / std::sqrt(2.0));
}

}  // namespace espn::testing

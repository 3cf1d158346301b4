#include "espn/costmodel.hpp"

#include <cstdio>
#include <numeric>

#include "espn/error.hpp"
#include "espn/nncore.hpp"

namespace espn {
namespace {

std::uint64_t mul(std::uint64_t a, std::uint64_t b, const char* what) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw ConfigError(std::string("cost model overflow computing ") + what);
  }
  return r;
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) noexcept {
  return a / b + (a % b != 0 ? 1 : 0);
}

}  // namespace

void CostInputs::validate() const {
  if (g == 0) throw ThresholdError("g = 0: crossover task lengths are undefined");
  if (l == 0 || d_phi == 0 || d_psi == 0 || p == 0 || bytes_per_scalar == 0) {
    throw ConfigError("cost inputs must all be positive");
  }
}

CostReport compute_costs(const CostInputs& inp) {
  inp.validate();
  CostReport r;
  r.omega_bp = mul(inp.g, inp.l, "omega_bp");
  r.omega_fm = mul(mul(inp.d_psi, inp.d_phi, "omega_fm"), inp.bytes_per_scalar, "omega_fm");
  r.omega_es = mul(mul(inp.p, inp.d_phi, "omega_es"), inp.bytes_per_scalar, "omega_es");
  r.l1 = ceil_div(r.omega_fm, inp.g);
  r.l2 = ceil_div(r.omega_es, inp.g);
  const std::uint64_t d = std::gcd(inp.d_psi, inp.p);
  r.ratio_num = inp.d_psi / d;
  r.ratio_den = inp.p / d;
  return r;
}

std::uint64_t protonet_state_size(std::uint64_t channels, std::uint64_t way) {
  EmbeddingNet net;
  net.channels = channels;
  net.validate();
  return mul(net.embedding_dim(), way, "D_psi");
}

CostInputs maml_preset(const CostInputs& base) {
  CostInputs m = base;
  m.d_psi = base.d_phi;
  return m;
}

std::string format_report(const CostInputs& inp, const CostReport& rep) {
  std::string out;
  char line[160];
  const auto row = [&](const char* key, unsigned long long v) {
    std::snprintf(line, sizeof line, "%-16s %20llu\n", key, v);
    out += line;
  };
  row("g (bytes/step)", inp.g);
  row("l (steps)", inp.l);
  row("D_phi", inp.d_phi);
  row("D_psi", inp.d_psi);
  row("P", inp.p);
  row("omega_bp", rep.omega_bp);
  row("omega_fm", rep.omega_fm);
  row("omega_es", rep.omega_es);
  row("l1 (BP=FM)", rep.l1);
  row("l2 (BP=ES)", rep.l2);
  std::snprintf(line, sizeof line, "%-16s %20.6g\n", "FM/ES ratio", rep.fm_to_es_ratio());
  out += line;
  return out;
}

}  // namespace espn

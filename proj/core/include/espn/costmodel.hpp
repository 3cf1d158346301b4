#pragma once

#include <cstdint>
#include <string>

namespace espn {

/// Inputs of the dominant-term memory comparison between backpropagation
/// through a task, forward-mode differentiation and ES.
struct CostInputs {
  std::uint64_t g = 0;      // bytes of intermediate tensors per inner-loop step
  std::uint64_t l = 0;      // inner-loop steps per task
  std::uint64_t d_phi = 0;  // meta-parameters
  std::uint64_t d_psi = 0;  // inner-loop model state (D_c * N for ProtoNet)
  std::uint64_t p = 0;      // population size
  std::uint64_t bytes_per_scalar = 4;

  void validate() const;
};

struct CostReport {
  std::uint64_t omega_bp = 0;  // g * l
  std::uint64_t omega_fm = 0;  // D_psi * D_phi * bytes
  std::uint64_t omega_es = 0;  // P * D_phi * bytes
  std::uint64_t l1 = 0;        // ceil(omega_fm / g): task length where BP = FM
  std::uint64_t l2 = 0;        // ceil(omega_es / g): task length where BP = ES
  // fm_to_es_ratio = ratio_num / ratio_den = D_psi / P, kept exact.
  std::uint64_t ratio_num = 0;
  std::uint64_t ratio_den = 1;

  double fm_to_es_ratio() const noexcept {
    return static_cast<double>(ratio_num) / static_cast<double>(ratio_den);
  }
};

/// Throws ThresholdError if g == 0 and ConfigError on overflow or other zero inputs.
CostReport compute_costs(const CostInputs& inp);

/// D_psi = embedding dim * way for the 32x32, four-block network.
std::uint64_t protonet_state_size(std::uint64_t channels, std::uint64_t way);

/// MAML keeps task-adapted parameters, so D_psi = D_phi.
CostInputs maml_preset(const CostInputs& base);

/// Aligned two-column text rendering.
std::string format_report(const CostInputs& inp, const CostReport& rep);

}  // namespace espn

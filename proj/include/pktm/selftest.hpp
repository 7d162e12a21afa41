#pragma once

#include <cstdint>

namespace pktm {

struct AdjointCheck {
  double data_side = 0.0;   // <L m, d>
  double image_side = 0.0;  // <m, L^T d>
  double relative_error() const;
};

// Dot-product test of forward modeling against migration on a randomized
// nx x ntau x 2-bin image and n_traces random traces.
AdjointCheck adjoint_dot_test(std::uint64_t seed, std::uint32_t nx = 48, std::uint32_t ntau = 48,
                              std::uint32_t n_traces = 50);

}  // namespace pktm

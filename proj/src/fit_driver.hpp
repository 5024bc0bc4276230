#pragma once

#include "statsvd/statsvd.hpp"

namespace statsvd::detail {

enum class SparseRule {
  kDoubleThreshold,
  kSingleThreshold,
};

// Shared alternating driver: initialization, mode sweeps, stopping rule and denoising.
TuckerFit run_fit(const Tensor& y, const StatSvdConfig& cfg, SparseRule rule, const SweepObserver& observer);

}  // namespace statsvd::detail

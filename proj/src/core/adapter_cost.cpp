// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include <cmath>

#include "moe_sieve/core.hpp"
#include "moe_sieve/error.hpp"

namespace moe_sieve {

AdapterCost estimate_adapter_cost(const AdapterCostInput& in) {
  if (!std::isfinite(in.always_on_params) || in.always_on_params < 0.0 ||
      !std::isfinite(in.expert_params_full) || in.expert_params_full < 0.0)
    fail(ErrorKind::invalid_argument, "adapter cost: parameter counts must be finite and >= 0");
  if (!(in.selected_fraction >= 0.0 && in.selected_fraction <= 1.0))
    fail(ErrorKind::invalid_argument, "adapter cost: selected_fraction must lie in [0, 1]");
  const double full = in.always_on_params + in.expert_params_full;
  if (full == 0.0)
    fail(ErrorKind::domain, "adapter cost: reduction undefined when the full adapter is empty");

  AdapterCost out;
  out.trainable_params = in.always_on_params + in.selected_fraction * in.expert_params_full;
  out.reduction_vs_full = in.selected_fraction == 1.0 ? 0.0 : 1.0 - out.trainable_params / full;
  return out;
}

}  // namespace moe_sieve

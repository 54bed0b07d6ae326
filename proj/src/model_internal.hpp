#pragma once

#include <span>
#include <vector>

#include "pmgeo/model.hpp"

namespace pmgeo::detail {

/// Mean cross-entropy over the batch (D x B) and its parameter gradients.
double loss_and_param_grads(const MlpModel& m, const Matrix& batch, std::span<const int> labels,
                            std::vector<Matrix>& gw, std::vector<Vector>& gb);

}  // namespace pmgeo::detail

#pragma once

#include "statsvd/statsvd.hpp"

#include <json.hpp>

#include <string>

namespace statsvd {

/// Frame as {"rows", "cols", "data"} with data row-major.
nlohmann::json frame_to_json(const Frame& f);
Frame frame_from_json(const nlohmann::json& j);

/// Shapes, loadings (row-major), supports (sorted, 0-based), core entries
/// (row-major), iteration count, convergence and the per-sweep trace.
/// The denoised tensor is not included.
nlohmann::json fit_to_json(const TuckerFit& fit);
TuckerFit fit_from_json(const nlohmann::json& j);

}  // namespace statsvd

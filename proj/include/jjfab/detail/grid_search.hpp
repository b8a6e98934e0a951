#pragma once

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

#include "jjfab/errors.hpp"

namespace jjfab::variability {

template <class Objective>
OptimizeResult grid_search(const std::vector<FreeParameter>& params, const OptimizeOptions& options,
                           Objective&& objective) {
  if (params.empty() || params.size() > 3)
    throw ConfigError("optimization takes between 1 and 3 free parameters");
  if (options.points_per_axis < 2) throw ConfigError("need at least 2 grid points per axis");
  if (options.refinement_rounds < 0) throw ConfigError("refinement rounds must be >= 0");
  for (const auto& p : params) {
    if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || !(p.lo < p.hi))
      throw ConfigError(fmt::format("parameter '{}' needs finite bounds lo < hi", p.name));
  }

  const std::size_t dims = params.size();
  const int n = options.points_per_axis;
  std::vector<double> lo(dims), hi(dims);
  for (std::size_t k = 0; k < dims; ++k) {
    lo[k] = params[k].lo;
    hi[k] = params[k].hi;
  }

  OptimizeResult result{.best = {}, .objective = std::numeric_limits<double>::infinity(), .trace = {}};
  std::size_t total = 1;
  for (std::size_t k = 0; k < dims; ++k) total *= static_cast<std::size_t>(n);

  for (int round = 0; round <= options.refinement_rounds; ++round) {
    std::vector<double> step(dims);
    for (std::size_t k = 0; k < dims; ++k) step[k] = (hi[k] - lo[k]) / (n - 1);
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::vector<double> x(dims);
      std::size_t rem = flat;
      for (std::size_t k = 0; k < dims; ++k) {
        const auto i = static_cast<int>(rem % static_cast<std::size_t>(n));
        rem /= static_cast<std::size_t>(n);
        // Pin grid ends exactly to the bounds.
        x[k] = i == n - 1 ? hi[k] : lo[k] + step[k] * i;
      }
      double f = std::numeric_limits<double>::quiet_NaN();
      try {
        f = objective(x);
      } catch (const DomainError&) {
      } catch (const ZeroAreaError&) {
      }
      result.trace.push_back(TraceRow{round, x, f});
      if (std::isfinite(f) && f < result.objective) {
        result.objective = f;
        result.best = x;
      }
    }
    if (result.best.empty()) break;
    for (std::size_t k = 0; k < dims; ++k) {
      lo[k] = std::max(params[k].lo, result.best[k] - step[k]);
      hi[k] = std::min(params[k].hi, result.best[k] + step[k]);
      if (!(lo[k] < hi[k])) hi[k] = lo[k] + std::numeric_limits<double>::epsilon();
    }
  }
  if (result.best.empty()) throw OptimizationError("objective was not finite at any grid point");
  return result;
}

}  // namespace jjfab::variability

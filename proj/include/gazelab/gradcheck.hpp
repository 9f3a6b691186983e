#pragma once

#include <functional>
#include <span>
#include <string>

#include "gazelab/autodiff.hpp"

namespace gazelab {

struct GradCheckOptions {
    double step = 1e-5;
    /// Components whose evaluation lies this close to a relu or max kink are
    /// skipped, as are components whose +-step evaluations take a different
    /// branch than the base point.
    double kink_exclusion = 1e-6;
};

struct GradCheckResult {
    /// max |analytic - numeric| / max(1, |numeric|) over compared components.
    double max_rel_error = 0.0;
    std::size_t compared = 0;
    std::size_t skipped = 0;
    /// "param#index[component]" of the worst component, empty if none.
    std::string worst;
};

/// `f` records a scalar on the given tape, reading the params through
/// Tape::param. It must be deterministic. Param gradients are clobbered.
using ScalarFn = std::function<Var(Tape&)>;

/// Compares backward() against central differences for every component of
/// every param.
GradCheckResult gradient_check(const ScalarFn& f, std::span<Param* const> params,
                               const GradCheckOptions& options = {});

}  // namespace gazelab

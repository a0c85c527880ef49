#pragma once

#include "minions/pipeline.hpp"

#include <optional>

namespace minions {

struct VisualResult {
    /// nullopt when no stage produced parseable JSON; the solver then falls
    /// back to the raw images.
    std::optional<VisualDescription> description;
    /// True once cv consecutive verifications passed.
    bool verified = false;
    int verify_rounds = 0;
};

/// Inspector, then Introspector, then verify/revise rounds until cv
/// consecutive passes or the round budget runs out. Requires images.
VisualResult extract_visual(const Problem& problem, StudioContext& ctx);

} // namespace minions

#pragma once

#include <cstdint>
#include <vector>

#include "oad/geomkin/heatmap.hpp"
#include "oad/geomkin/kinematics.hpp"
#include "oad/pipeline/config.hpp"

namespace oad {

/// Hides the listed joints in one frame with index `frame`: zeroed volumes,
/// or uniform noise in (0, 1% of the volume peak]. Noise is drawn from a
/// per-frame substream of `seed`.
void occlude_frame(Heatmap3D& h, std::size_t frame, const OcclusionSpec& spec, std::uint64_t seed);

/// Range-checked occlusion of a whole sequence.
void occlude(std::vector<Heatmap3D>& frames, const OcclusionSpec& spec, std::uint64_t seed);

/// Throws kInvalidInput when the listed joints or frames fall outside a
/// sequence of the given shape.
void check_occlusion(const OcclusionSpec& spec, std::size_t frames, std::size_t joints);

/// Fills invalid entries per joint by linear interpolation between the
/// nearest valid frames, repeating the first/last valid value at the ends.
/// valid[t][j]; throws kInsufficientData when a joint is never valid.
std::vector<JointPositions> interpolate_missing(const std::vector<JointPositions>& joints,
                                                const std::vector<std::vector<bool>>& valid);

}  // namespace oad

#pragma once

// Trajectory files: JSON with mu_x, mu_u, V_x, V_u (row-major nested arrays)
// and the per-step state covariance.

#include <string>

#include "stochlift/lifted.hpp"

namespace stochlift {

std::string TrajectoryToJson(const LiftedTrajectory& traj);

/// Reads mu_x, mu_u, V_x and V_u; other keys are ignored. Throws ConfigError
/// on malformed documents and ShapeError on ragged blocks.
LiftedTrajectory TrajectoryFromJson(const std::string& text);

}  // namespace stochlift

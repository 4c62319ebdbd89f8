#pragma once

#include "sfl/lti.hpp"
#include "sfl/pce.hpp"

namespace sfl {

/// Discrete-time aircraft pitch model in lag-2 I/O form (one input, three
/// outputs), used throughout the bundled experiments.
VarxModel aircraft_varx();

/// The matching disturbance model: independent uniform components on
/// (-0.1, 0.1), (-3, 3) and (-0.8, 0.8).
DisturbanceSpec aircraft_uniform_disturbance();

/// Gaussian variant with the same per-component standard deviations.
DisturbanceSpec aircraft_gaussian_disturbance();

} // namespace sfl

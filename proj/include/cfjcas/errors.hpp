// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cfjcas {

/// Malformed or inconsistent configuration (bad counts, unknown keys, ...).
struct InvalidConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Geometry that leaves an angle undefined (AP colocated with the target).
struct SingularGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sensing beam has no usable component outside the UE channel span.
struct DegenerateProjectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Matrix / vector dimensions do not match the declared problem shape.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Power allocation problem has no feasible point.
struct InfeasibleAllocationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Too few samples to calibrate the requested quantile.
struct InsufficientSamplesError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cfjcas

#pragma once

#include "ggkaf/spd.hpp"

namespace ggkaf {

/// One (input, desired output) pair.
struct Sample {
  Vector u;
  double d = 0.0;
};

}  // namespace ggkaf

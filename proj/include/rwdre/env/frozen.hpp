#pragma once

#include "rwdre/env/spin_flip.hpp"

namespace rwdre {

// Time- and space-constant environment (all sites occupied or all vacant).
struct FrozenEnvironment {
  int value = 1;
  int state(Site, Time) const noexcept { return value; }
};

}  // namespace rwdre

#pragma once

#include "stvar/acs.hpp"
#include "stvar/baseline.hpp"
#include "stvar/eval.hpp"
#include "stvar/io.hpp"
#include "stvar/model.hpp"
#include "stvar/rng.hpp"
#include "stvar/settings.hpp"
#include "stvar/simulate.hpp"
#include "stvar/solvers.hpp"
#include "stvar/types.hpp"
#include "stvar/weights.hpp"

namespace stvar {
inline constexpr const char* version = "0.1.0";
}

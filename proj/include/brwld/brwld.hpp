// Umbrella header.
#pragma once

#include "brwld/decoration.hpp"
#include "brwld/estimators.hpp"
#include "brwld/harness.hpp"
#include "brwld/point_measure.hpp"
#include "brwld/report.hpp"
#include "brwld/reproduction.hpp"
#include "brwld/rng.hpp"
#include "brwld/spine.hpp"
#include "brwld/tree_sim.hpp"
#include "brwld/validate.hpp"

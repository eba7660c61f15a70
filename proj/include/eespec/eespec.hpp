#pragma once

#include "eespec/analytic.hpp"
#include "eespec/pipeline.hpp"
#include "eespec/pipesim.hpp"
#include "eespec/rng.hpp"
#include "eespec/speccore.hpp"
#include "eespec/toylm.hpp"

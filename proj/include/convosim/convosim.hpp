#pragma once

// Umbrella header.

#include "convosim/domain.hpp"
#include "convosim/ids.hpp"
#include "convosim/serialization.hpp"
#include "convosim/context.hpp"
#include "convosim/prompts.hpp"
#include "convosim/backend.hpp"
#include "convosim/engine.hpp"
#include "convosim/analysis.hpp"
#include "convosim/config.hpp"

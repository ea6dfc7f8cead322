#pragma once

#include "ggkaf/dictionary.hpp"
#include "ggkaf/filter.hpp"
#include "ggkaf/harness.hpp"
#include "ggkaf/kernel.hpp"
#include "ggkaf/sample.hpp"
#include "ggkaf/spd.hpp"
#include "ggkaf/systems.hpp"
#include "ggkaf/updates.hpp"

#pragma once

#include "flowsmooth/core.hpp"
#include "flowsmooth/diagnostics.hpp"
#include "flowsmooth/fields.hpp"
#include "flowsmooth/rng.hpp"
#include "flowsmooth/samplers.hpp"
#include "flowsmooth/schedules.hpp"

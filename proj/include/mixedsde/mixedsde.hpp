#pragma once

// Umbrella header for the full library surface.

#include "core.hpp"
#include "fracalc.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "model.hpp"
#include "noise.hpp"
#include "parallel.hpp"
#include "pricing.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "solver.hpp"
#include "viability.hpp"

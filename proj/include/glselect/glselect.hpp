#pragma once

// Umbrella header for the two-stage sparse-selection library.

#include "glselect/conditions.hpp"
#include "glselect/core.hpp"
#include "glselect/data_pipeline.hpp"
#include "glselect/designs.hpp"
#include "glselect/experiments.hpp"
#include "glselect/gauss_lasso.hpp"
#include "glselect/lasso.hpp"
#include "glselect/population.hpp"
#include "glselect/rng.hpp"
#include "glselect/version.hpp"

#pragma once

#include "ssgp/csv.hpp"
#include "ssgp/designs.hpp"
#include "ssgp/error.hpp"
#include "ssgp/gp_core.hpp"
#include "ssgp/io.hpp"
#include "ssgp/kernel_linalg.hpp"
#include "ssgp/optimize.hpp"
#include "ssgp/rng.hpp"
#include "ssgp/sampler.hpp"
#include "ssgp/selection.hpp"
#include "ssgp/testbed.hpp"

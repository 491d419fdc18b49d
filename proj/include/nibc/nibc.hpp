#pragma once

#include "nibc/algorithms.hpp"
#include "nibc/bounds.hpp"
#include "nibc/cover.hpp"
#include "nibc/entropy.hpp"
#include "nibc/error.hpp"
#include "nibc/format.hpp"
#include "nibc/harness.hpp"
#include "nibc/measurement.hpp"
#include "nibc/rng.hpp"
#include "nibc/sigma_io.hpp"
#include "nibc/spaces.hpp"

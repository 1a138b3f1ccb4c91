#pragma once

#include "setstat/cone.hpp"
#include "setstat/convex_body.hpp"
#include "setstat/errors.hpp"
#include "setstat/frechet.hpp"
#include "setstat/geometry.hpp"
#include "setstat/io.hpp"
#include "setstat/missing.hpp"
#include "setstat/rng.hpp"
#include "setstat/simulate.hpp"
#include "setstat/sphere_grid.hpp"
#include "setstat/support_vector.hpp"

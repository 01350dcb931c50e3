#pragma once
// umbrella header

#include "mssk/cascade.hpp"
#include "mssk/cavity.hpp"
#include "mssk/chebyshev.hpp"
#include "mssk/config.hpp"
#include "mssk/gg.hpp"
#include "mssk/io.hpp"
#include "mssk/model.hpp"
#include "mssk/numeric.hpp"
#include "mssk/optimize.hpp"
#include "mssk/parallel.hpp"
#include "mssk/parisi.hpp"
#include "mssk/quadrature.hpp"
#include "mssk/recursion.hpp"
#include "mssk/rng.hpp"
#include "mssk/simulate.hpp"
#include "mssk/stats.hpp"
#include "mssk/tree_field.hpp"

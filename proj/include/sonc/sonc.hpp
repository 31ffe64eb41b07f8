#pragma once

#include "sonc/error.hpp"
#include "sonc/rng.hpp"
#include "sonc/lp.hpp"
#include "sonc/polynomial.hpp"
#include "sonc/circuit.hpp"
#include "sonc/cones.hpp"
#include "sonc/ipm.hpp"
#include "sonc/bound.hpp"
#include "sonc/instances.hpp"
#include "sonc/io.hpp"

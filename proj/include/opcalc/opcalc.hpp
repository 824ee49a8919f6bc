#pragma once

// Umbrella header: the full operator-calculus toolkit.

#include "opcalc/core.hpp"
#include "opcalc/element.hpp"
#include "opcalc/matrix_functions.hpp"
#include "opcalc/calculus.hpp"
#include "opcalc/oracle.hpp"
#include "opcalc/discretize.hpp"
#include "opcalc/fredholm.hpp"
#include "opcalc/schrodinger.hpp"
#include "opcalc/random.hpp"
#include "opcalc/io.hpp"

#pragma once

#include "shorttime/bilinear.hpp"
#include "shorttime/dispersion.hpp"
#include "shorttime/energy.hpp"
#include "shorttime/estimate.hpp"
#include "shorttime/experiment.hpp"
#include "shorttime/fft.hpp"
#include "shorttime/field.hpp"
#include "shorttime/lattice.hpp"
#include "shorttime/multipliers.hpp"
#include "shorttime/projector.hpp"
#include "shorttime/quadrature.hpp"
#include "shorttime/runner.hpp"
#include "shorttime/snapshot.hpp"
#include "shorttime/solver.hpp"
#include "shorttime/variation.hpp"

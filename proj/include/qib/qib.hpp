#pragma once

// Umbrella header: quantum Information Bottleneck rate functions, classical
// reduction, and the linear-algebra substrate they stand on.

#include "qib/channels.hpp"
#include "qib/classical_ib.hpp"
#include "qib/eigen.hpp"
#include "qib/errors.hpp"
#include "qib/io.hpp"
#include "qib/lagrangian.hpp"
#include "qib/matrix.hpp"
#include "qib/parallel.hpp"
#include "qib/presets.hpp"
#include "qib/random.hpp"
#include "qib/rng.hpp"
#include "qib/solver.hpp"
#include "qib/solver_config.hpp"
#include "qib/states.hpp"
#include "qib/subsystems.hpp"

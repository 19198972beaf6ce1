#pragma once

// Umbrella header for the distributed Kalman filter library.

#include "dkf/analysis.hpp"
#include "dkf/cli.hpp"
#include "dkf/config.hpp"
#include "dkf/errors.hpp"
#include "dkf/experiments.hpp"
#include "dkf/kalman_central.hpp"
#include "dkf/kalman_dist.hpp"
#include "dkf/linalg.hpp"
#include "dkf/netmodel.hpp"
#include "dkf/riemann.hpp"
#include "dkf/sim.hpp"

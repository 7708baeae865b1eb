#pragma once

#include "surfsim/cli.hpp"
#include "surfsim/config.hpp"
#include "surfsim/engine.hpp"
#include "surfsim/errors.hpp"
#include "surfsim/metrics.hpp"
#include "surfsim/rng.hpp"
#include "surfsim/spectrum.hpp"
#include "surfsim/strategy.hpp"
#include "surfsim/topology.hpp"
#include "surfsim/trace.hpp"

#pragma once

// Stochastic Cucker-Smale flocking with common multiplicative noise.

#include "csflock/brownian.hpp"
#include "csflock/config.hpp"
#include "csflock/ensemble.hpp"
#include "csflock/error.hpp"
#include "csflock/integrators.hpp"
#include "csflock/kernel.hpp"
#include "csflock/metrics.hpp"
#include "csflock/model.hpp"
#include "csflock/persist.hpp"
#include "csflock/philox.hpp"
#include "csflock/state.hpp"
#include "csflock/theory.hpp"
#include "csflock/verify.hpp"

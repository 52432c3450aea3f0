#pragma once

#include "sidelink/harness.hpp"
#include "sidelink/model.hpp"
#include "sidelink/protocol.hpp"
#include "sidelink/rate.hpp"
#include "sidelink/rng.hpp"
#include "sidelink/sched.hpp"
#include "sidelink/solvers.hpp"
#include "sidelink/stats.hpp"

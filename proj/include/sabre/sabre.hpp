#pragma once

#include "sabre/aggregation.hpp"
#include "sabre/analysis.hpp"
#include "sabre/attacks.hpp"
#include "sabre/belief.hpp"
#include "sabre/config.hpp"
#include "sabre/errors.hpp"
#include "sabre/kalman.hpp"
#include "sabre/linear_task.hpp"
#include "sabre/presets.hpp"
#include "sabre/record.hpp"
#include "sabre/rng.hpp"
#include "sabre/runner.hpp"
#include "sabre/scenario.hpp"
#include "sabre/simulator.hpp"
#include "sabre/topology.hpp"

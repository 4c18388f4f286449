#pragma once

#include "pilotgrid/common.hpp"
#include "pilotgrid/grid.hpp"
#include "pilotgrid/metrics.hpp"
#include "pilotgrid/channel.hpp"
#include "pilotgrid/estimator.hpp"
#include "pilotgrid/modem.hpp"
#include "pilotgrid/harness.hpp"

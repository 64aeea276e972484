#pragma once

#include "core.hpp"
#include "moment_odes.hpp"
#include "particles.hpp"
#include "grid.hpp"
#include "grid_solver.hpp"
#include "model2_solver.hpp"
#include "diagnostics.hpp"
#include "sweep.hpp"
#include "config.hpp"
#include "execute.hpp"

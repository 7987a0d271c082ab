#pragma once

#include "geometry.hpp"
#include "material.hpp"
#include "grid.hpp"
#include "solve.hpp"
#include "minimize.hpp"
#include "phasefield.hpp"
#include "damage.hpp"
#include "config.hpp"
#include "svg.hpp"
#include "experiment.hpp"

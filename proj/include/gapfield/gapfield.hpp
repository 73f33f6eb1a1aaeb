#pragma once

// Umbrella header for the library. The command-line layer (cli.hpp) is separate because
// it pulls in CLI11.

#include "gapfield/core.hpp"
#include "gapfield/geometry.hpp"
#include "gapfield/images.hpp"
#include "gapfield/quadrature.hpp"
#include "gapfield/mesh.hpp"
#include "gapfield/field_solver.hpp"
#include "gapfield/asymptotics.hpp"
#include "gapfield/sweeps.hpp"
#include "gapfield/config_io.hpp"
#include "gapfield/svg_plot.hpp"

#pragma once

#include "diffusion.hpp"
#include "eig.hpp"
#include "engine.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "matrix.hpp"
#include "probes.hpp"
#include "profiles.hpp"
#include "shift.hpp"

#pragma once

#include "antibunch/types.hpp"
#include "antibunch/environment.hpp"
#include "antibunch/spectral.hpp"
#include "antibunch/kernel.hpp"
#include "antibunch/scattering.hpp"
#include "antibunch/scenarios.hpp"
#include "antibunch/sweep.hpp"
#include "antibunch/io.hpp"

#pragma once

#include "magnopol/calib.hpp"
#include "magnopol/dynamics.hpp"
#include "magnopol/errors.hpp"
#include "magnopol/linalg.hpp"
#include "magnopol/model.hpp"
#include "magnopol/phasemap.hpp"
#include "magnopol/polynomial.hpp"
#include "magnopol/spectral.hpp"
#include "magnopol/stability.hpp"
#include "magnopol/steady.hpp"
#include "magnopol/trajectory.hpp"
#include "magnopol/units.hpp"

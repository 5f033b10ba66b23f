#pragma once

#include "errors.hpp"
#include "model.hpp"
#include "spectral.hpp"
#include "integrate.hpp"
#include "equilibrium.hpp"
#include "two_patch.hpp"
#include "optimizer.hpp"
#include "regimes.hpp"
#include "network.hpp"
#include "csv.hpp"

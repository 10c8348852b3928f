#pragma once

#include "mixauto/network.hpp"
#include "mixauto/market.hpp"
#include "mixauto/solver.hpp"
#include "mixauto/programs.hpp"
#include "mixauto/kkt_analysis.hpp"
#include "mixauto/sweep.hpp"
#include "mixauto/io.hpp"

#pragma once

#include "riskprox/common.hpp"
#include "riskprox/dataio.hpp"
#include "riskprox/oracle.hpp"
#include "riskprox/portfolio.hpp"
#include "riskprox/probspace.hpp"
#include "riskprox/prox.hpp"
#include "riskprox/risk.hpp"
#include "riskprox/solver.hpp"
#include "riskprox/utility.hpp"

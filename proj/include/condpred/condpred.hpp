// condpred.hpp: everything.

#ifndef CONDPRED_CONDPRED_HPP
#define CONDPRED_CONDPRED_HPP

#include "condpred/error.hpp"
#include "condpred/random.hpp"
#include "condpred/special.hpp"
#include "condpred/quadrature.hpp"
#include "condpred/stats.hpp"
#include "condpred/parallel.hpp"
#include "condpred/marginals.hpp"
#include "condpred/copulas.hpp"
#include "condpred/condexp.hpp"
#include "condpred/theorems.hpp"
#include "condpred/ordered.hpp"
#include "condpred/coalition.hpp"
#include "condpred/config.hpp"
#include "condpred/report.hpp"
#include "condpred/runner.hpp"

#endif  // CONDPRED_CONDPRED_HPP

#pragma once

// Umbrella header: estimation under the realizable-contamination model of
// missing data.

#include "misrob/adversary.hpp"
#include "misrob/csv.hpp"
#include "misrob/gaussian.hpp"
#include "misrob/harness.hpp"
#include "misrob/kolmogorov.hpp"
#include "misrob/linalg.hpp"
#include "misrob/masked.hpp"
#include "misrob/model.hpp"
#include "misrob/momenttest.hpp"
#include "misrob/net.hpp"
#include "misrob/netopt.hpp"
#include "misrob/patterns.hpp"
#include "misrob/polyreg.hpp"
#include "misrob/quadrature.hpp"
#include "misrob/rng.hpp"

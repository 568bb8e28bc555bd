#pragma once

#include "gfrag/branching.hpp"
#include "gfrag/config.hpp"
#include "gfrag/error.hpp"
#include "gfrag/ext_real.hpp"
#include "gfrag/json_io.hpp"
#include "gfrag/kappa.hpp"
#include "gfrag/levy.hpp"
#include "gfrag/levy_sim.hpp"
#include "gfrag/model.hpp"
#include "gfrag/output.hpp"
#include "gfrag/pssmp.hpp"
#include "gfrag/rng.hpp"
#include "gfrag/roots.hpp"
#include "gfrag/solutions.hpp"
#include "gfrag/stats.hpp"
#include "gfrag/verification.hpp"
#include "gfrag/version.hpp"

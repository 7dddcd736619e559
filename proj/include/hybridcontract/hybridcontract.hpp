#pragma once

// Umbrella header for the core library. The command layer (cli.hpp) is not
// included here because it depends on a vendored JSON header; include it
// directly from tool code.

#include "hybridcontract/certify.hpp"
#include "hybridcontract/errors.hpp"
#include "hybridcontract/hybrid_system.hpp"
#include "hybridcontract/integrate.hpp"
#include "hybridcontract/metric.hpp"
#include "hybridcontract/models.hpp"
#include "hybridcontract/nelder_mead.hpp"
#include "hybridcontract/norms.hpp"
#include "hybridcontract/sampling.hpp"
#include "hybridcontract/toml_lite.hpp"
#include "hybridcontract/variational.hpp"
#include "hybridcontract/version.hpp"

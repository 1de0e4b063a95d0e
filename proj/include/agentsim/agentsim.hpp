#pragma once

// Umbrella header: the whole library in one include.

#include "agentsim/errors.hpp"     // IWYU pragma: export
#include "agentsim/rng.hpp"        // IWYU pragma: export
#include "agentsim/bits.hpp"       // IWYU pragma: export
#include "agentsim/port_graph.hpp" // IWYU pragma: export
#include "agentsim/agent_core.hpp" // IWYU pragma: export
#include "agentsim/simulator.hpp"  // IWYU pragma: export
#include "agentsim/oracle.hpp"     // IWYU pragma: export
#include "agentsim/algolib.hpp"    // IWYU pragma: export
#include "agentsim/harness.hpp"    // IWYU pragma: export

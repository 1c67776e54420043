#pragma once

#include "dsintel/decision.hpp"
#include "dsintel/domain_posterior.hpp"
#include "dsintel/ds_core.hpp"
#include "dsintel/metacluster.hpp"
#include "dsintel/specifier.hpp"
#include "dsintel/track_graph.hpp"

#pragma once

#include "bfc/types.hpp"
#include "bfc/funnel.hpp"
#include "bfc/transform.hpp"
#include "bfc/controller.hpp"
#include "bfc/feasibility.hpp"
#include "bfc/plants.hpp"
#include "bfc/reference.hpp"
#include "bfc/sim.hpp"
#include "bfc/config.hpp"
#include "bfc/trace_io.hpp"

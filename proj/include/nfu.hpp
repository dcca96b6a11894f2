#pragma once

#include "nfu/allocator.hpp"
#include "nfu/cli.hpp"
#include "nfu/core.hpp"
#include "nfu/estimators.hpp"
#include "nfu/io.hpp"
#include "nfu/propensity.hpp"
#include "nfu/simulator.hpp"

#pragma once

// umbrella header for the fedoui library

#include "fedoui/aggregation.hpp"
#include "fedoui/artifacts.hpp"
#include "fedoui/beta_dist.hpp"
#include "fedoui/cli.hpp"
#include "fedoui/config.hpp"
#include "fedoui/data.hpp"
#include "fedoui/errors.hpp"
#include "fedoui/harness.hpp"
#include "fedoui/nn.hpp"
#include "fedoui/oui.hpp"
#include "fedoui/parallel.hpp"
#include "fedoui/rng.hpp"
#include "fedoui/tensor.hpp"

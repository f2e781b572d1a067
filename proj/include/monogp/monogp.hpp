#pragma once

// Umbrella header: Gaussian-process regression with optional monotonicity
// constraints via virtual derivative points and expectation propagation.

#include "monogp/benchmark.hpp"
#include "monogp/datasets.hpp"
#include "monogp/ep_monotonic.hpp"
#include "monogp/gp_regression.hpp"
#include "monogp/hyperopt.hpp"
#include "monogp/io_util.hpp"
#include "monogp/kernel.hpp"
#include "monogp/linalg.hpp"
#include "monogp/metrics.hpp"
#include "monogp/model_io.hpp"
#include "monogp/normal.hpp"
#include "monogp/rng.hpp"
#include "monogp/types.hpp"

#pragma once

// Umbrella header.

#include "ustat/blocking.hpp"
#include "ustat/dgp.hpp"
#include "ustat/error.hpp"
#include "ustat/experiments.hpp"
#include "ustat/kernel.hpp"
#include "ustat/parallel.hpp"
#include "ustat/report.hpp"
#include "ustat/resampling.hpp"
#include "ustat/rng.hpp"

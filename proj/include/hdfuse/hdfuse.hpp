#pragma once

// Umbrella header.

#include "hdfuse/amem.hpp"
#include "hdfuse/ca90.hpp"
#include "hdfuse/datapipe.hpp"
#include "hdfuse/encoder.hpp"
#include "hdfuse/error.hpp"
#include "hdfuse/experiment.hpp"
#include "hdfuse/hypervector.hpp"
#include "hdfuse/imstore.hpp"
#include "hdfuse/layout.hpp"
#include "hdfuse/rng.hpp"

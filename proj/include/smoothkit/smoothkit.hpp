#pragma once

// Umbrella header: the whole toolkit.

#include "bilateral.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "guided.hpp"
#include "image.hpp"
#include "image_io.hpp"
#include "l0.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "operators.hpp"
#include "ops.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "rolling_guidance.hpp"
#include "rtv.hpp"

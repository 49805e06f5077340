#pragma once

#include "zstack/bench.hpp"
#include "zstack/coverage.hpp"
#include "zstack/error.hpp"
#include "zstack/focus_measure.hpp"
#include "zstack/image.hpp"
#include "zstack/image_io.hpp"
#include "zstack/parallel.hpp"
#include "zstack/peak_search.hpp"
#include "zstack/pipeline.hpp"
#include "zstack/rng.hpp"
#include "zstack/serialization.hpp"
#include "zstack/simsynth.hpp"
#include "zstack/stacker.hpp"
#include "zstack/suites.hpp"
#include "zstack/wavelet.hpp"

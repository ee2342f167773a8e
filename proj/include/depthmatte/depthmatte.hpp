#pragma once

// Umbrella header for the compositing core. The network service lives in
// depthmatte/service.hpp and is not included here.

#include "depthmatte/align.hpp"
#include "depthmatte/bench.hpp"
#include "depthmatte/error.hpp"
#include "depthmatte/frame.hpp"
#include "depthmatte/io.hpp"
#include "depthmatte/matte.hpp"
#include "depthmatte/parallel.hpp"
#include "depthmatte/params.hpp"
#include "depthmatte/prefilter.hpp"
#include "depthmatte/refine.hpp"
#include "depthmatte/stream.hpp"
#include "depthmatte/synth.hpp"

#ifndef FYONLINE_FYONLINE_HPP
#define FYONLINE_FYONLINE_HPP

#include "common.hpp"
#include "config.hpp"
#include "decoder.hpp"
#include "frank_wolfe.hpp"
#include "harness.hpp"
#include "learners.hpp"
#include "output_space.hpp"
#include "regularizer.hpp"
#include "rng.hpp"
#include "streams.hpp"
#include "target_loss.hpp"
#include "trace_io.hpp"
#include "verification.hpp"

#endif

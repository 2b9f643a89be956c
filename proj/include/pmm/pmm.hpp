#pragma once
// Umbrella header.

#include "channel.hpp"
#include "codec.hpp"
#include "core.hpp"
#include "detect.hpp"
#include "gmm.hpp"
#include "harness.hpp"
#include "optpower.hpp"
#include "rate.hpp"
#include "records.hpp"
#include "rng.hpp"

#pragma once

// Umbrella header.

#include "common.hpp"
#include "core.hpp"
#include "csv.hpp"
#include "evaluation.hpp"
#include "forest.hpp"
#include "idleak.hpp"
#include "metrics.hpp"
#include "presets.hpp"
#include "rebalance.hpp"
#include "snowflake.hpp"
#include "split.hpp"
#include "textleak.hpp"
#include "timestamps.hpp"

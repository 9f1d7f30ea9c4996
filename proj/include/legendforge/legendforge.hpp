#pragma once

// Umbrella header: legend item-description extraction from historical map
// legends via in-context-learning prompts, plus evaluation and indexing.

#include "legendforge/dataset.hpp"
#include "legendforge/digest.hpp"
#include "legendforge/error.hpp"
#include "legendforge/evaluation.hpp"
#include "legendforge/gateway.hpp"
#include "legendforge/geometry.hpp"
#include "legendforge/index.hpp"
#include "legendforge/jsonfmt.hpp"
#include "legendforge/pipeline.hpp"
#include "legendforge/prompting.hpp"
#include "legendforge/raster.hpp"
#include "legendforge/report.hpp"
#include "legendforge/response.hpp"

#pragma once

#include "reflkit/bvh.hpp"
#include "reflkit/color.hpp"
#include "reflkit/common.hpp"
#include "reflkit/external_op.hpp"
#include "reflkit/hash.hpp"
#include "reflkit/mesh.hpp"
#include "reflkit/metrics.hpp"
#include "reflkit/operators.hpp"
#include "reflkit/parallel.hpp"
#include "reflkit/patch.hpp"
#include "reflkit/pipeline.hpp"
#include "reflkit/pipeline_config.hpp"
#include "reflkit/poisson.hpp"
#include "reflkit/procedural.hpp"
#include "reflkit/raster.hpp"
#include "reflkit/raster_io.hpp"
#include "reflkit/render.hpp"
#include "reflkit/resample.hpp"
#include "reflkit/rng.hpp"
#include "reflkit/shading.hpp"
#include "reflkit/uv_raster.hpp"
#include "reflkit/vec.hpp"

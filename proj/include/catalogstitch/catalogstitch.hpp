#pragma once

// Umbrella header: catalog-compositing preprocessing (dimension-aware target
// masks), occlusion-aware hybrid restoration, pluggable generative backends
// with deterministic mocks, closed-form metrics, and the benchmark harness.

#include "catalogstitch/errors.hpp"
#include "catalogstitch/raster.hpp"
#include "catalogstitch/png_io.hpp"
#include "catalogstitch/mask_geometry.hpp"
#include "catalogstitch/occlusion.hpp"
#include "catalogstitch/backend.hpp"
#include "catalogstitch/metrics.hpp"
#include "catalogstitch/dataset.hpp"
#include "catalogstitch/fixtures.hpp"
#include "catalogstitch/pipeline.hpp"
#include "catalogstitch/report.hpp"

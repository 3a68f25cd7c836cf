#pragma once

#include "cnl/error.hpp"
#include "cnl/geo.hpp"
#include "cnl/geo_point.hpp"
#include "cnl/graph.hpp"
#include "cnl/ingest.hpp"
#include "cnl/metrics.hpp"
#include "cnl/spectral.hpp"

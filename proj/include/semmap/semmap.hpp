// Umbrella header.
#ifndef SEMMAP_SEMMAP_HPP_
#define SEMMAP_SEMMAP_HPP_

#include "semmap/core.hpp"
#include "semmap/geometry.hpp"
#include "semmap/imgproc.hpp"
#include "semmap/io.hpp"
#include "semmap/map.hpp"
#include "semmap/memory.hpp"
#include "semmap/metrics.hpp"
#include "semmap/nav.hpp"
#include "semmap/pipelines.hpp"
#include "semmap/qa.hpp"
#include "semmap/raycast.hpp"
#include "semmap/rng.hpp"
#include "semmap/scene.hpp"
#include "semmap/trajectory.hpp"

#endif  // SEMMAP_SEMMAP_HPP_

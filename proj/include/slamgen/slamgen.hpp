#ifndef SLAMGEN_SLAMGEN_HPP
#define SLAMGEN_SLAMGEN_HPP

#include "slamgen/error.hpp"
#include "slamgen/random.hpp"
#include "slamgen/geom.hpp"
#include "slamgen/raster.hpp"
#include "slamgen/scene.hpp"
#include "slamgen/render.hpp"
#include "slamgen/occupancy.hpp"
#include "slamgen/planner.hpp"
#include "slamgen/mapper.hpp"
#include "slamgen/labelgen.hpp"
#include "slamgen/verify.hpp"
#include "slamgen/motionstats.hpp"
#include "slamgen/evalbench.hpp"
#include "slamgen/io.hpp"
#include "slamgen/pipeline.hpp"

#endif  // SLAMGEN_SLAMGEN_HPP

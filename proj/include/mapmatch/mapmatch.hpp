#ifndef MAPMATCH_MAPMATCH_HPP_
#define MAPMATCH_MAPMATCH_HPP_

#include "mapmatch/camera.hpp"
#include "mapmatch/database.hpp"
#include "mapmatch/geometry.hpp"
#include "mapmatch/grid.hpp"
#include "mapmatch/harness.hpp"
#include "mapmatch/matcher.hpp"
#include "mapmatch/oracle.hpp"
#include "mapmatch/scene.hpp"
#include "mapmatch/types.hpp"

#endif  // MAPMATCH_MAPMATCH_HPP_

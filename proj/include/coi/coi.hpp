#pragma once

#include "coi/diffmap.hpp"
#include "coi/edges.hpp"
#include "coi/errors.hpp"
#include "coi/image_io.hpp"
#include "coi/interest.hpp"
#include "coi/json.hpp"
#include "coi/pipeline.hpp"
#include "coi/raster.hpp"
#include "coi/registration.hpp"

#pragma once

// Umbrella header for the up-conversion streak-camera toolkit.

#include "upstreak/common.hpp"
#include "upstreak/dispersion.hpp"
#include "upstreak/fields.hpp"
#include "upstreak/phasematching.hpp"
#include "upstreak/upconversion.hpp"
#include "upstreak/streak_camera.hpp"
#include "upstreak/analysis.hpp"
#include "upstreak/io.hpp"
#include "upstreak/config.hpp"

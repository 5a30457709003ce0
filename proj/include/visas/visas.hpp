#pragma once

#include "visas/attack.hpp"
#include "visas/detector.hpp"
#include "visas/error.hpp"
#include "visas/geo.hpp"
#include "visas/imaging.hpp"
#include "visas/metrics.hpp"
#include "visas/pnm.hpp"
#include "visas/report.hpp"
#include "visas/scenario.hpp"
#include "visas/simulator.hpp"
#include "visas/telemetry.hpp"

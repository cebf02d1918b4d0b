#pragma once

#include "smpp/baseline.hpp"
#include "smpp/config.hpp"
#include "smpp/error.hpp"
#include "smpp/fit.hpp"
#include "smpp/geometry.hpp"
#include "smpp/grf.hpp"
#include "smpp/inference.hpp"
#include "smpp/interaction.hpp"
#include "smpp/likelihood.hpp"
#include "smpp/model.hpp"
#include "smpp/neighbor_index.hpp"
#include "smpp/pattern.hpp"
#include "smpp/raster.hpp"
#include "smpp/report.hpp"
#include "smpp/simulate.hpp"
#include "smpp/stat_cache.hpp"
#include "smpp/statistics.hpp"
#include "smpp/study.hpp"

#pragma once

#include "shapegain/channel.hpp"
#include "shapegain/constellation.hpp"
#include "shapegain/constellation_io.hpp"
#include "shapegain/demapper.hpp"
#include "shapegain/errors.hpp"
#include "shapegain/rate_adaptation.hpp"
#include "shapegain/rational.hpp"
#include "shapegain/reach.hpp"
#include "shapegain/report_io.hpp"
#include "shapegain/run_config.hpp"
#include "shapegain/training.hpp"

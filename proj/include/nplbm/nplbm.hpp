#pragma once

#include "nplbm/data.hpp"
#include "nplbm/data_matrix.hpp"
#include "nplbm/fit_result.hpp"
#include "nplbm/gibbs.hpp"
#include "nplbm/master.hpp"
#include "nplbm/niw.hpp"
#include "nplbm/partition.hpp"
#include "nplbm/runtime.hpp"
#include "nplbm/serialize.hpp"
#include "nplbm/sweep.hpp"
#include "nplbm/worker.hpp"

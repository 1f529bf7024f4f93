#pragma once

#include "slsid/config.hpp"
#include "slsid/dataset_io.hpp"
#include "slsid/errors.hpp"
#include "slsid/estimate_io.hpp"
#include "slsid/estimation.hpp"
#include "slsid/generators.hpp"
#include "slsid/gramians.hpp"
#include "slsid/hankel.hpp"
#include "slsid/harness.hpp"
#include "slsid/l2_distance.hpp"
#include "slsid/model.hpp"
#include "slsid/model_io.hpp"
#include "slsid/model_selection.hpp"
#include "slsid/sequence.hpp"
#include "slsid/simulator.hpp"
#include "slsid/truncation.hpp"

#pragma once

#include "sdr/chisq_mix.hpp"
#include "sdr/config.hpp"
#include "sdr/covariance.hpp"
#include "sdr/data.hpp"
#include "sdr/error.hpp"
#include "sdr/hypothesis.hpp"
#include "sdr/inference.hpp"
#include "sdr/json_io.hpp"
#include "sdr/random.hpp"
#include "sdr/simulation.hpp"
#include "sdr/sir.hpp"
#include "sdr/standardize.hpp"

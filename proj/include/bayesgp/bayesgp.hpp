#pragma once

#include <bayesgp/benchfuncs.hpp>
#include <bayesgp/dataset_io.hpp>
#include <bayesgp/errors.hpp>
#include <bayesgp/experiment.hpp>
#include <bayesgp/gp_core.hpp>
#include <bayesgp/metrics.hpp>
#include <bayesgp/priors.hpp>
#include <bayesgp/proposals.hpp>
#include <bayesgp/rng.hpp>
#include <bayesgp/sampler.hpp>
#include <bayesgp/types.hpp>

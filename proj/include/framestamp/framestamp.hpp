#pragma once

#include "framestamp/errors.hpp"
#include "framestamp/temporal.hpp"
#include "framestamp/losses.hpp"
#include "framestamp/inference.hpp"
#include "framestamp/features.hpp"
#include "framestamp/scorer.hpp"
#include "framestamp/predict.hpp"
#include "framestamp/synthdata.hpp"
#include "framestamp/train.hpp"
#include "framestamp/metrics.hpp"
#include "framestamp/bench.hpp"
#include "framestamp/config.hpp"
#include "framestamp/dense_api.hpp"

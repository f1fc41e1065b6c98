// Copyright 2026 the nonstat-geo authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nsgeo/covariance.hpp"
#include "nsgeo/errors.hpp"
#include "nsgeo/io.hpp"
#include "nsgeo/likelihood.hpp"
#include "nsgeo/matern.hpp"
#include "nsgeo/metrics.hpp"
#include "nsgeo/model.hpp"
#include "nsgeo/optim.hpp"
#include "nsgeo/predict.hpp"
#include "nsgeo/rng.hpp"
#include "nsgeo/simulate.hpp"
#include "nsgeo/stats.hpp"

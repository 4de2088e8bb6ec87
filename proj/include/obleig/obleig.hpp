#pragma once

/// Umbrella header: principal eigenvalues of truncated oblique problems,
/// certificate checking, long-run reaction-diffusion classification, and
/// the scenario machinery tying them together.

#include "obleig/averages.hpp"
#include "obleig/certificates.hpp"
#include "obleig/classify.hpp"
#include "obleig/common.hpp"
#include "obleig/csvio.hpp"
#include "obleig/domain.hpp"
#include "obleig/eigensolver.hpp"
#include "obleig/errors.hpp"
#include "obleig/expr.hpp"
#include "obleig/fields.hpp"
#include "obleig/geometry.hpp"
#include "obleig/grid.hpp"
#include "obleig/operators.hpp"
#include "obleig/parabolic.hpp"
#include "obleig/plot.hpp"
#include "obleig/relations.hpp"
#include "obleig/scenario.hpp"

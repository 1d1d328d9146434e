#pragma once

#include "crllb/bounds.hpp"
#include "crllb/config.hpp"
#include "crllb/errors.hpp"
#include "crllb/identities.hpp"
#include "crllb/linalg.hpp"
#include "crllb/models.hpp"
#include "crllb/quadrature.hpp"
#include "crllb/rng.hpp"
#include "crllb/sampling.hpp"
#include "crllb/support_estimation.hpp"

#pragma once

#include "tautline/data.hpp"
#include "tautline/distributions.hpp"
#include "tautline/error.hpp"
#include "tautline/expfam.hpp"
#include "tautline/loss.hpp"
#include "tautline/model.hpp"
#include "tautline/multiscale.hpp"
#include "tautline/quantile.hpp"
#include "tautline/random.hpp"
#include "tautline/rank_loss.hpp"
#include "tautline/signals.hpp"
#include "tautline/simulate.hpp"
#include "tautline/taut_string.hpp"
#include "tautline/verify.hpp"

#pragma once

#include "pairls/bench.hpp"
#include "pairls/checked.hpp"
#include "pairls/formula.hpp"
#include "pairls/oracle.hpp"
#include "pairls/rng.hpp"
#include "pairls/score.hpp"
#include "pairls/search.hpp"
#include "pairls/smtlib.hpp"

#pragma once

#include "rwd/error.hpp"
#include "rwd/rational.hpp"
#include "rwd/term.hpp"
#include "rwd/rewrite.hpp"
#include "rwd/expr.hpp"
#include "rwd/algebra.hpp"
#include "rwd/dynamics.hpp"
#include "rwd/correspondence.hpp"
#include "rwd/recurrence.hpp"
#include "rwd/dsl.hpp"

#pragma once

#include "errors.hpp"
#include "tagged_value.hpp"
#include "matrix_core.hpp"
#include "parametrize.hpp"
#include "unitarity_condition.hpp"
#include "triangles.hpp"
#include "n4_explorer.hpp"
#include "fit.hpp"
#include "stats.hpp"
#include "io.hpp"
#include "commands.hpp"

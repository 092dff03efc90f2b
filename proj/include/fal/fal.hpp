// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fal/domain.hpp"
#include "fal/error.hpp"
#include "fal/eval.hpp"
#include "fal/expr.hpp"
#include "fal/fd_solver.hpp"
#include "fal/heap.hpp"
#include "fal/program.hpp"
#include "fal/search.hpp"
#include "fal/solver.hpp"
#include "fal/vm.hpp"

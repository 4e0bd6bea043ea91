#pragma once

#include "diff/adam.hpp"
#include "diff/gradcheck.hpp"
#include "diff/graph.hpp"
#include "diff/ops.hpp"
#include "diff/tensor.hpp"
#include "diff/weights.hpp"

#pragma once

// Umbrella header.

#include "expr.hpp"
#include "numkern.hpp"
#include "ccop.hpp"
#include "regmpoc.hpp"
#include "census.hpp"
#include "bridge.hpp"
#include "oracle.hpp"
#include "problem_file.hpp"
#include "report.hpp"

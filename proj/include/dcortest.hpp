#pragma once

#include "dcortest/bench.hpp"
#include "dcortest/dcor.hpp"
#include "dcortest/distributions.hpp"
#include "dcortest/errors.hpp"
#include "dcortest/inference.hpp"
#include "dcortest/io.hpp"
#include "dcortest/pdcor.hpp"
#include "dcortest/pearson.hpp"
#include "dcortest/result.hpp"
#include "dcortest/rng.hpp"
#include "dcortest/simulation.hpp"

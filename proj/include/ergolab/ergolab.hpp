#pragma once

#include "ergolab/adversary.hpp"
#include "ergolab/averaging.hpp"
#include "ergolab/cone.hpp"
#include "ergolab/config.hpp"
#include "ergolab/convergence.hpp"
#include "ergolab/errors.hpp"
#include "ergolab/observables.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/runner.hpp"
#include "ergolab/systems.hpp"
#include "ergolab/util.hpp"
#include "ergolab/version.hpp"

#pragma once

#include "certikit/adversary.hpp"
#include "certikit/certify.hpp"
#include "certikit/conic.hpp"
#include "certikit/domain.hpp"
#include "certikit/error.hpp"
#include "certikit/hypoclasses.hpp"
#include "certikit/io.hpp"
#include "certikit/oracles.hpp"
#include "certikit/rng.hpp"
#include "certikit/sampling.hpp"
#include "certikit/stars.hpp"

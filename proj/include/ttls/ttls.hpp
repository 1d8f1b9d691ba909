#pragma once

#include "ttls/error.hpp"
#include "ttls/core.hpp"
#include "ttls/derivative.hpp"
#include "ttls/condition.hpp"
#include "ttls/structure.hpp"
#include "ttls/rng.hpp"
#include "ttls/sce.hpp"
#include "ttls/io.hpp"
#include "ttls/harness.hpp"
#include "ttls/version.hpp"

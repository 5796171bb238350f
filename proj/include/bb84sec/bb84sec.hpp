#pragma once

#include "bb84sec/matrix.hpp"
#include "bb84sec/quantum.hpp"
#include "bb84sec/attacks.hpp"
#include "bb84sec/metrics.hpp"
#include "bb84sec/bounds.hpp"
#include "bb84sec/simplex.hpp"
#include "bb84sec/optimizer.hpp"
#include "bb84sec/rng.hpp"
#include "bb84sec/protocol.hpp"

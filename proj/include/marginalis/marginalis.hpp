#pragma once

// Umbrella header.

#include "marginalis/bloch.hpp"
#include "marginalis/compat.hpp"
#include "marginalis/io.hpp"
#include "marginalis/marginal.hpp"
#include "marginalis/polysystem.hpp"
#include "marginalis/repro.hpp"
#include "marginalis/rng.hpp"
#include "marginalis/signature.hpp"
#include "marginalis/states.hpp"
#include "marginalis/tensor.hpp"
#include "marginalis/uniqueness.hpp"

#pragma once

// Umbrella header for the whole library.

#include "clifford/algebra.hpp"
#include "clifford/autodiff.hpp"
#include "clifford/datagen.hpp"
#include "clifford/fields.hpp"
#include "clifford/layers.hpp"
#include "clifford/models.hpp"
#include "clifford/rng.hpp"
#include "clifford/tensor.hpp"
#include "clifford/transforms.hpp"

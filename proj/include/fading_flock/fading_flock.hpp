#pragma once

#include "fading_flock/analysis.hpp"
#include "fading_flock/collision.hpp"
#include "fading_flock/configuration.hpp"
#include "fading_flock/dynamics.hpp"
#include "fading_flock/error.hpp"
#include "fading_flock/graph.hpp"
#include "fading_flock/interaction.hpp"
#include "fading_flock/partition.hpp"

#pragma once

#include "spinmetro/error.hpp"
#include "spinmetro/linalg.hpp"
#include "spinmetro/spin_core.hpp"
#include "spinmetro/dynamics.hpp"
#include "spinmetro/metrology.hpp"
#include "spinmetro/detection_noise.hpp"
#include "spinmetro/parallel.hpp"
#include "spinmetro/protocols.hpp"
#include "spinmetro/io.hpp"

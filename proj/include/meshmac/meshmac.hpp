#pragma once

#include "meshmac/frame.hpp"
#include "meshmac/frame_builder.hpp"
#include "meshmac/codec.hpp"
#include "meshmac/tx_control.hpp"
#include "meshmac/medium_access.hpp"
#include "meshmac/trace.hpp"
#include "meshmac/sim.hpp"
#include "meshmac/scenario.hpp"

#pragma once

// Umbrella header.

#include "aec.hpp"
#include "audio_buffer.hpp"
#include "decorrelators.hpp"
#include "error.hpp"
#include "fft.hpp"
#include "masked_noise.hpp"
#include "metrics.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "scal.hpp"
#include "signals.hpp"
#include "wav.hpp"
#include "window.hpp"
#include "wola.hpp"

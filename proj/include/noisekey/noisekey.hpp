#pragma once

// Convenience umbrella for the whole library.

#include "noisekey/attack.hpp"
#include "noisekey/channel.hpp"
#include "noisekey/errors.hpp"
#include "noisekey/keystore.hpp"
#include "noisekey/params.hpp"
#include "noisekey/phrg.hpp"
#include "noisekey/protocol.hpp"
#include "noisekey/quantum.hpp"
#include "noisekey/version.hpp"
#include "noisekey/wheel.hpp"

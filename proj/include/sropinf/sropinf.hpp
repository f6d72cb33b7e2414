#pragma once

#include "sropinf/error.hpp"
#include "sropinf/spectral_field.hpp"
#include "sropinf/models.hpp"
#include "sropinf/symmetry.hpp"
#include "sropinf/pod.hpp"
#include "sropinf/rom.hpp"
#include "sropinf/opinf.hpp"
#include "sropinf/pipeline.hpp"
#include "sropinf/metrics.hpp"
#include "sropinf/io.hpp"
#include "sropinf/config.hpp"

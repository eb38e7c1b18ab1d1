#pragma once

#include "obbkit/dota_io.hpp"
#include "obbkit/errors.hpp"
#include "obbkit/eval.hpp"
#include "obbkit/gaussian_metrics.hpp"
#include "obbkit/geometry.hpp"
#include "obbkit/linalg2.hpp"
#include "obbkit/overlap.hpp"
#include "obbkit/report_io.hpp"
#include "obbkit/text.hpp"

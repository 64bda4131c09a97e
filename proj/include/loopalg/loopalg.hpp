#pragma once

#include "loopalg/errors.hpp"
#include "loopalg/scalar.hpp"
#include "loopalg/linalg.hpp"
#include "loopalg/algebra.hpp"
#include "loopalg/model_io.hpp"
#include "loopalg/loop_models.hpp"
#include "loopalg/homology.hpp"
#include "loopalg/bv_exact.hpp"
#include "loopalg/emss.hpp"
#include "loopalg/string_ops.hpp"

#pragma once

#include "errors.hpp"
#include "log_complex.hpp"
#include "cpoint.hpp"
#include "quadrature.hpp"
#include "rules.hpp"
#include "parallel.hpp"
#include "svd.hpp"
#include "fock.hpp"
#include "symbols.hpp"
#include "measures.hpp"
#include "operators.hpp"
#include "localization.hpp"
#include "json_io.hpp"
#include "experiments.hpp"

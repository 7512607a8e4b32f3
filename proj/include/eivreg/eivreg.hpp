#pragma once

#include "eivreg/csv.hpp"
#include "eivreg/deconv_core.hpp"
#include "eivreg/errors.hpp"
#include "eivreg/noise_models.hpp"
#include "eivreg/penalties.hpp"
#include "eivreg/riskbench.hpp"
#include "eivreg/selector.hpp"
#include "eivreg/shannon_basis.hpp"
#include "eivreg/simlab.hpp"
#include "eivreg/version.hpp"

#pragma once

#include "fairwipe/data.hpp"
#include "fairwipe/error.hpp"
#include "fairwipe/experiment.hpp"
#include "fairwipe/fairness.hpp"
#include "fairwipe/graph.hpp"
#include "fairwipe/lbfgs.hpp"
#include "fairwipe/linear_model.hpp"
#include "fairwipe/synthetic.hpp"
#include "fairwipe/unlearning.hpp"

#pragma once

#include "spqn/build.hpp"
#include "spqn/common.hpp"
#include "spqn/dataset.hpp"
#include "spqn/eval.hpp"
#include "spqn/manifest.hpp"
#include "spqn/model_io.hpp"
#include "spqn/network.hpp"
#include "spqn/oracle.hpp"
#include "spqn/params.hpp"
#include "spqn/rng.hpp"
#include "spqn/sample.hpp"
#include "spqn/scopes.hpp"
#include "spqn/train.hpp"
#include "spqn/validate.hpp"
#include "spqn/varset.hpp"
#include "spqn/version.hpp"

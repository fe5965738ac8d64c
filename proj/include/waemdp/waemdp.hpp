#pragma once

// Everything: autodiff, distributions, environments, latent models, the WAE
// objective and trainer, and certification.

#include "waemdp/errors.hpp"
#include "waemdp/rng.hpp"

#include "waemdp/autodiff/adam.hpp"
#include "waemdp/autodiff/checkpoint.hpp"
#include "waemdp/autodiff/mlp.hpp"
#include "waemdp/autodiff/tape.hpp"

#include "waemdp/dist/maf.hpp"
#include "waemdp/dist/relaxed.hpp"

#include "waemdp/env/environments.hpp"
#include "waemdp/env/ground_mdp.hpp"
#include "waemdp/env/policy.hpp"
#include "waemdp/env/sampler.hpp"
#include "waemdp/env/tabular_mdp.hpp"
#include "waemdp/env/trace_io.hpp"
#include "waemdp/env/wrappers.hpp"

#include "waemdp/certify/bounds.hpp"
#include "waemdp/certify/lipschitz.hpp"
#include "waemdp/certify/pac.hpp"
#include "waemdp/certify/property.hpp"
#include "waemdp/certify/tabular.hpp"
#include "waemdp/certify/value_difference.hpp"
#include "waemdp/certify/value_iteration.hpp"

#include "waemdp/latent/certification.hpp"
#include "waemdp/latent/explicit.hpp"
#include "waemdp/latent/interface.hpp"
#include "waemdp/latent/model.hpp"
#include "waemdp/latent/model_file.hpp"

#include "waemdp/wae/objective.hpp"
#include "waemdp/wae/penalty.hpp"
#include "waemdp/wae/train.hpp"

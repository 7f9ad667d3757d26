// ionraman.hpp - umbrella header

#pragma once

#include "ionraman/operators.hpp"
#include "ionraman/model.hpp"
#include "ionraman/lindblad.hpp"
#include "ionraman/observables.hpp"
#include "ionraman/integrator.hpp"
#include "ionraman/fit.hpp"
#include "ionraman/scenario.hpp"

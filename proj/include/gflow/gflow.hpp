#ifndef GFLOW_GFLOW_HPP
#define GFLOW_GFLOW_HPP

#include "gflow/flow.hpp"
#include "gflow/group.hpp"
#include "gflow/inequalities.hpp"
#include "gflow/orthogonalize.hpp"
#include "gflow/polynomial.hpp"
#include "gflow/sphere.hpp"
#include "gflow/types.hpp"

#endif  // GFLOW_GFLOW_HPP

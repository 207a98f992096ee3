#ifndef SEMIDYN_SEMIDYN_HPP_
#define SEMIDYN_SEMIDYN_HPP_

#include "semidyn/affine.hpp"
#include "semidyn/commutator.hpp"
#include "semidyn/complex.hpp"
#include "semidyn/error.hpp"
#include "semidyn/expr.hpp"
#include "semidyn/fixtures.hpp"
#include "semidyn/grid.hpp"
#include "semidyn/io.hpp"
#include "semidyn/sampling.hpp"
#include "semidyn/word.hpp"

#endif  // SEMIDYN_SEMIDYN_HPP_

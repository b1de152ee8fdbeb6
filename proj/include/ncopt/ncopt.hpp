#ifndef NCOPT_NCOPT_HPP
#define NCOPT_NCOPT_HPP

#include "asymptotics.hpp"
#include "config.hpp"
#include "densities.hpp"
#include "models.hpp"
#include "optimize.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "simulate.hpp"
#include "theory.hpp"

#endif  // NCOPT_NCOPT_HPP

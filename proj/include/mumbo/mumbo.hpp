#ifndef MUMBO_MUMBO_HPP
#define MUMBO_MUMBO_HPP

#include "mumbo/error.hpp"
#include "mumbo/numerics.hpp"
#include "mumbo/space.hpp"
#include "mumbo/kernel.hpp"
#include "mumbo/gp.hpp"
#include "mumbo/local_search.hpp"
#include "mumbo/gp_fit.hpp"
#include "mumbo/maxval.hpp"
#include "mumbo/acquisition.hpp"
#include "mumbo/direct.hpp"
#include "mumbo/benchmarks.hpp"
#include "mumbo/config.hpp"
#include "mumbo/trace.hpp"
#include "mumbo/harness.hpp"

#endif

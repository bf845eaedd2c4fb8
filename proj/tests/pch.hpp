#pragma once

#include <mfe/blowup.hpp>
#include <mfe/experiments.hpp>
#include <mfe/fem.hpp>
#include <mfe/functional.hpp>
#include <mfe/geometry.hpp>
#include <mfe/greens.hpp>
#include <mfe/mesh.hpp>
#include <mfe/rearrangement.hpp>
#include <mfe/report.hpp>
#include <mfe/sampling.hpp>
#include <mfe/testfn.hpp>

#include "oracles.hpp"

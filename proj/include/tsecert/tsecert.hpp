#pragma once

#include "tsecert/certification.hpp"
#include "tsecert/common.hpp"
#include "tsecert/dataset.hpp"
#include "tsecert/field.hpp"
#include "tsecert/fundamental_diagram.hpp"
#include "tsecert/godunov.hpp"
#include "tsecert/laxhopf.hpp"
#include "tsecert/mlp.hpp"
#include "tsecert/optimize.hpp"
#include "tsecert/piecewise.hpp"
#include "tsecert/scenario.hpp"
#include "tsecert/sweep.hpp"
#include "tsecert/train.hpp"
#include "tsecert/version.hpp"

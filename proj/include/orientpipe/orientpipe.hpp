#pragma once

#include "orientpipe/error.hpp"
#include "orientpipe/angles.hpp"
#include "orientpipe/geometry.hpp"
#include "orientpipe/assignment.hpp"
#include "orientpipe/kmeans.hpp"
#include "orientpipe/jersey.hpp"
#include "orientpipe/fusion.hpp"
#include "orientpipe/eval.hpp"
#include "orientpipe/config.hpp"
#include "orientpipe/io.hpp"
#include "orientpipe/synthgen.hpp"
#include "orientpipe/toytrain.hpp"

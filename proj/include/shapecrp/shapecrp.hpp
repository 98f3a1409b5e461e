#pragma once

#include "shapecrp/bundle.hpp"
#include "shapecrp/cache.hpp"
#include "shapecrp/coding.hpp"
#include "shapecrp/config.hpp"
#include "shapecrp/eigensolver.hpp"
#include "shapecrp/error.hpp"
#include "shapecrp/evaluation.hpp"
#include "shapecrp/io.hpp"
#include "shapecrp/laplace.hpp"
#include "shapecrp/manifest.hpp"
#include "shapecrp/mesh.hpp"
#include "shapecrp/nnls.hpp"
#include "shapecrp/projection.hpp"
#include "shapecrp/shapes.hpp"
#include "shapecrp/spectrum.hpp"
#include "shapecrp/svm.hpp"

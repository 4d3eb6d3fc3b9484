#pragma once

#include "cascdc/types.hpp"
#include "cascdc/rng.hpp"
#include "cascdc/linalg.hpp"
#include "cascdc/sbm.hpp"
#include "cascdc/similarity.hpp"
#include "cascdc/kmeans.hpp"
#include "cascdc/clustering.hpp"
#include "cascdc/lasso.hpp"
#include "cascdc/netbuild.hpp"
#include "cascdc/evaluation.hpp"
#include "cascdc/config.hpp"
#include "cascdc/parallel.hpp"
#include "cascdc/io.hpp"
#include "cascdc/experiment.hpp"

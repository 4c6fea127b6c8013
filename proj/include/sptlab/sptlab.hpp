#pragma once

#include "sptlab/baselines.hpp"
#include "sptlab/dataset.hpp"
#include "sptlab/eval.hpp"
#include "sptlab/experiment.hpp"
#include "sptlab/matrix.hpp"
#include "sptlab/normal.hpp"
#include "sptlab/partition.hpp"
#include "sptlab/policy_tree.hpp"
#include "sptlab/random.hpp"
#include "sptlab/spt.hpp"
#include "sptlab/synth.hpp"
#include "sptlab/teacher.hpp"

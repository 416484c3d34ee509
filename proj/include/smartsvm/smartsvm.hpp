#pragma once

#include "smartsvm/ber.hpp"
#include "smartsvm/class_tree.hpp"
#include "smartsvm/classifier.hpp"
#include "smartsvm/cli.hpp"
#include "smartsvm/core.hpp"
#include "smartsvm/dataset.hpp"
#include "smartsvm/linear_svm.hpp"
#include "smartsvm/mst.hpp"
#include "smartsvm/oracle.hpp"
#include "smartsvm/parallel.hpp"
#include "smartsvm/rng.hpp"

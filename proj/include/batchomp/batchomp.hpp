#pragma once

#include <batchomp/batch_control.hpp>
#include <batchomp/benchmark.hpp>
#include <batchomp/cholesky.hpp>
#include <batchomp/classify.hpp>
#include <batchomp/dense.hpp>
#include <batchomp/errors.hpp>
#include <batchomp/kernels.hpp>
#include <batchomp/matrix_io.hpp>
#include <batchomp/naive.hpp>
#include <batchomp/oracle.hpp>
#include <batchomp/packed.hpp>
#include <batchomp/problem.hpp>
#include <batchomp/types.hpp>
#include <batchomp/v0.hpp>

#pragma once

#include <opath/cccp.hpp>
#include <opath/convex_solver.hpp>
#include <opath/dataset.hpp>
#include <opath/error.hpp>
#include <opath/io.hpp>
#include <opath/kernel.hpp>
#include <opath/loss.hpp>
#include <opath/model_select.hpp>
#include <opath/parallel.hpp>
#include <opath/partition.hpp>
#include <opath/path.hpp>
#include <opath/rng.hpp>
#include <opath/synthetic.hpp>

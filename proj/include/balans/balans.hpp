#ifndef BALANS_BALANS_HPP
#define BALANS_BALANS_HPP

#include "core.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "pipeline.hpp"
#include "preprocess.hpp"
#include "random.hpp"
#include "sampler.hpp"
#include "smoother.hpp"
#include "synthetic.hpp"
#include "theory.hpp"

#endif

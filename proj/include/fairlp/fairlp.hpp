#pragma once

#include "fairlp/analysis.hpp"
#include "fairlp/curve.hpp"
#include "fairlp/errors.hpp"
#include "fairlp/io.hpp"
#include "fairlp/lp.hpp"
#include "fairlp/matrix.hpp"
#include "fairlp/post.hpp"
#include "fairlp/pre.hpp"
#include "fairlp/prob.hpp"

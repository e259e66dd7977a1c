#pragma once

#include "qqe/assignment.hpp"
#include "qqe/embedding.hpp"
#include "qqe/io.hpp"
#include "qqe/knn.hpp"
#include "qqe/line_fit.hpp"
#include "qqe/matching.hpp"
#include "qqe/metrics.hpp"
#include "qqe/objective.hpp"
#include "qqe/quantiles.hpp"
#include "qqe/random.hpp"
#include "qqe/reference.hpp"
#include "qqe/transform.hpp"
#include "qqe/types.hpp"

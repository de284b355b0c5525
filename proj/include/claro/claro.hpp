#pragma once

// Umbrella header: the whole public API except the CLI front end
// (include claro/cli/run.hpp separately to embed that).

#include "claro/error.hpp"
#include "claro/explain/attribution.hpp"
#include "claro/explain/curves.hpp"
#include "claro/explain/importance.hpp"
#include "claro/models/glm.hpp"
#include "claro/models/nn.hpp"
#include "claro/models/predictor.hpp"
#include "claro/models/serialize.hpp"
#include "claro/models/tree.hpp"
#include "claro/report/export.hpp"
#include "claro/report/plot.hpp"
#include "claro/rng.hpp"
#include "claro/tabular/csv.hpp"
#include "claro/tabular/dataset.hpp"
#include "claro/tabular/schema.hpp"
#include "claro/tabular/synthetic.hpp"

#pragma once

// Meaning-form correlation toolkit: language generation, distances, Mantel
// tests, corpus ingestion and the experiment drivers.

#include "mfc/corpus.hpp"
#include "mfc/error.hpp"
#include "mfc/experiments.hpp"
#include "mfc/langgen.hpp"
#include "mfc/metrics.hpp"
#include "mfc/parallel.hpp"
#include "mfc/random.hpp"
#include "mfc/stats.hpp"
#include "mfc/tree.hpp"

#pragma once

#include <vector>

#include "vcgs/bench/benchmark.h"
#include "vcgs/models/evaluator.h"
#include "vcgs/models/sampler.h"

namespace vcgs {

/// Adapters from trained models to the benchmark's callbacks. The models
/// must outlive the returned functions; they are only read.
GraspSource sampler_source(SamplerModel& model);
GraspScorer evaluator_scorer(EvaluatorModel& model, const GripperModel& gm);

/// Corpus objects whose id occurs in `records`, in corpus order.
std::vector<CorpusObject> objects_in(const std::vector<CorpusObject>& corpus,
                                     const std::vector<DatasetRecord>& records);

}  // namespace vcgs

#pragma once

#include <vector>

#include "bioqa/dataset.hpp"

namespace bioqa {

// Deterministic toy corpus for demos and end-to-end checks. Answers are
// distinctive "zq..." words placed right after a cue token, so a small
// model can fit the set quickly. `cue` lets callers build shifted-domain
// variants of the same task.
std::vector<Question> synthetic_dataset(int n_questions, uint64_t seed,
                                        const std::string& cue = "marker");

}  // namespace bioqa

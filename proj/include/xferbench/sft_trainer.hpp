#pragma once

#include <vector>

#include "xferbench/history.hpp"
#include "xferbench/model.hpp"
#include "xferbench/training_loop.hpp"

namespace xferbench {

// Sequential fine-tuning: each stage trains the same parameter store for its epoch budget,
// then the dev-selected epoch becomes the starting point of the next stage. The model is
// left holding the final stage's selected checkpoint.
TrainingHistory run_sft(TextToTextModel& model, const std::vector<Stage>& stages,
                        const DataMap& data, const TrainConfig& cfg);

void validate_stages(const std::vector<Stage>& stages, const DataMap& data);

}  // namespace xferbench

#pragma once

#include "CLI11.hpp"
#include "common.hpp"

namespace cli {

void register_specialize(CLI::App& app, ArtifactTracker& artifacts);
void register_postspec_train(CLI::App& app, ArtifactTracker& artifacts);
void register_postspec_apply(CLI::App& app, ArtifactTracker& artifacts);
void register_auxgan_train(CLI::App& app, ArtifactTracker& artifacts);
void register_align(CLI::App& app, ArtifactTracker& artifacts);
void register_transfer(CLI::App& app, ArtifactTracker& artifacts);
void register_eval_sim(CLI::App& app, ArtifactTracker& artifacts);
void register_eval_ls(CLI::App& app, ArtifactTracker& artifacts);
void register_demo_synthetic(CLI::App& app, ArtifactTracker& artifacts);

}  // namespace cli

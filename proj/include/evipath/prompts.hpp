#pragma once

#include <string>

namespace evipath::prompts {

// System prompts for the two synthesis roles and the two training roles.
// Synthesis prompts reveal the answer and evidence; training prompts do not.
// Trajectories formatted with one version must be replayed with the same
// version, so the set is stamped and round-trips through a directory of
// plain-text files.
struct PromptSet {
  std::string version;

  // Synthesis-time planner (answer and evidence shown).
  std::string planner_synthesis_plain;
  std::string planner_synthesis_entity;
  // Synthesis-time executor (golden indices shown).
  std::string executor_synthesis;
  // Synthesis-time sub-answer derivation (golden evidence only).
  std::string subanswer_synthesis;

  // Training/inference-time planner.
  std::string planner_train_plain;
  std::string planner_train_entity;
  // Training/inference-time executor.
  std::string executor_train;
};

// Built-in prompt set, version "builtin-v1".
const PromptSet& builtin();

// One file per prompt plus version.txt; bytes are stored verbatim.
PromptSet load_dir(const std::string& dir);
void write_dir(const PromptSet& set, const std::string& dir);

}  // namespace evipath::prompts

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "evipath/backends.hpp"
#include "evipath/dataset.hpp"
#include "evipath/executor.hpp"
#include "evipath/planner.hpp"
#include "evipath/prompts.hpp"

namespace evipath::trajectory {

// A fully validated synthesis result: the planner episode plus one executor
// record per Search call, consistent with the source sample.
struct Trajectory {
  std::string sample_id;
  std::string question;
  std::string answer;
  std::string dataset_tag;
  tags::Dialect dialect = tags::Dialect::plain;
  planner::PlannerPath path;
  std::vector<executor::ExecutorRecord> records;
};

// One SFT conversation: roles + contents plus bookkeeping metadata.
struct SftRecord {
  std::string kind;  // "planner_multi_turn" or "executor_single_turn"
  std::vector<backends::ChatMessage> messages;
  nlohmann::ordered_json meta;
};

// Cross-checks episode and executor records against the sample before
// accepting a trajectory:
//   CountMismatch        broken structure or record/call pairing
//   ObservationMismatch  an observation drifted from its record's answer
//   CitationError        a selected fact is not golden (or not in the sample)
//   AnswerMismatch       final answer != gold under metric normalization
Trajectory assemble(const dataset::QaSample& sample, tags::Dialect dialect,
                    const planner::PlannerPath& path,
                    std::vector<executor::ExecutorRecord> records);

// Multi-turn planner conversation in the training layout (no answer leak):
// system, "Question: ...", then assistant/observation turns verbatim.
SftRecord format_planner(const Trajectory& trajectory, const prompts::PromptSet& prompt_set);

// One single-turn conversation per executor record.
std::vector<SftRecord> format_executor(const Trajectory& trajectory,
                                       const prompts::PromptSet& prompt_set);

// The training/inference executor user message ("Question: ...\nSupporting
// evidences:\n[0] ..."), shared with the agent runtime.
std::string executor_user_block(const std::string& sub_question,
                                const std::vector<dataset::SupportingFact>& facts);

// JSONL {"kind","messages","meta"}; read validates shape and roles
// (SchemaError with the offending line).
void write_sft(const std::filesystem::path& path, const std::vector<SftRecord>& records);
std::vector<SftRecord> read_sft(const std::filesystem::path& path);

// JSONL trajectory shards. Turns are stored as rendered strings and re-parsed
// strictly on read (a tampered turn surfaces as SchemaError naming the line).
void write_trajectories(const std::filesystem::path& path,
                        const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectories(const std::filesystem::path& path);

}  // namespace evipath::trajectory

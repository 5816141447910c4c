#pragma once

#include <functional>
#include <string>
#include <vector>

#include "evipath/backends.hpp"
#include "evipath/dataset.hpp"
#include "evipath/prompts.hpp"
#include "evipath/tags.hpp"

namespace evipath::planner {

// Ordered sub-problems extracted from the first think block.
struct Plan {
  std::vector<std::string> sub_questions;
  bool operator==(const Plan&) const = default;
};

struct EpisodeLimits {
  int max_steps = 8;            // action turns per episode
  int max_actions_per_step = 4; // Search calls per action turn
  int max_plan_len = 8;
};

// One synthesis episode as seen from the planner side: assistant turns (the
// last one carries the final answer), one observation per action turn
// (annotations included, prefixes not), and the entity bindings seeded from
// the question for the entity-anchored dialect.
struct PlannerPath {
  Plan plan;
  std::vector<tags::ParsedTurn> turns;
  std::vector<std::string> observations;
  std::vector<tags::CandidateBinding> initial_bindings;
  std::string final_answer;
  int step_count = 0;  // action turns taken; turns.size() == step_count + 1
};

// Answers one Search call during synthesis (the executor acting as oracle).
using StepOracle = std::function<std::string(const tags::SearchCall&)>;

// Numbered lines ("1. ...") of a think block, in order; empty when none.
std::vector<std::string> extract_plan(const std::string& think_text);

// Subjects of the sample's golden triples that appear in the question, in
// order of first appearance, bound to indices 0, 1, ... The surface is the
// question's own spelling. Text-only samples yield no bindings.
std::vector<tags::CandidateBinding> derive_initial_bindings(const dataset::QaSample& sample);

// Appends " Candidate: [k] Name" for pool-triple subjects newly mentioned in
// the sentence, extending `bindings` as it goes. Disambiguated subjects like
// "Naresh Kumar (tennis)" match on their base name.
std::string annotate_candidates(const std::string& sentence, const dataset::QaSample& sample,
                                std::vector<tags::CandidateBinding>& bindings);

// Inverse of the annotation step for validation purposes.
std::string strip_candidate_annotation(const std::string& line);

// The synthesis-time first user message (question + answer + golden evidence;
// the entity dialect restates the question with its candidate list).
std::string planner_user_block(const dataset::QaSample& sample, tags::Dialect dialect,
                               const std::vector<tags::CandidateBinding>& bindings);

// "Obs: " (plain) or "Observation: \n" (entity_anchored).
std::string observation_prefix(tags::Dialect dialect);

// First-turn generation only: returns the extracted plan. MalformedPlan when
// no usable numbered plan appears within the retry budget.
Plan decompose(const dataset::QaSample& sample, tags::Dialect dialect,
               backends::GenerationBackend& gen, const prompts::PromptSet& prompt_set,
               const EpisodeLimits& limits = {},
               const backends::RetryPolicy& retry = {}, int content_retries = 3);

// Full scripted episode: generate a turn, answer every Search call through
// the oracle, feed the observation back, repeat until the final answer.
// Malformed turns are regenerated with a fresh seed up to `content_retries`;
// persistent malformation raises TagError (or MalformedPlan for the first
// turn), and exceeding max_steps or the per-step action cap raises
// StepBudgetExceeded.
PlannerPath run_episode(const dataset::QaSample& sample, tags::Dialect dialect,
                        backends::GenerationBackend& gen, const StepOracle& oracle,
                        const prompts::PromptSet& prompt_set,
                        const EpisodeLimits& limits = {},
                        const backends::RetryPolicy& retry = {}, int content_retries = 3);

}  // namespace evipath::planner

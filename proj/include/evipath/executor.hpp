#pragma once

#include <string>
#include <utility>
#include <vector>

#include "evipath/backends.hpp"
#include "evipath/dataset.hpp"
#include "evipath/prompts.hpp"
#include "evipath/tags.hpp"

namespace evipath::executor {

// Outcome of thresholded similarity selection over the golden evidence.
// `selected` keeps (fact id, cosine score) pairs in evidence display order.
struct EvidenceSelection {
  std::string answer_sentence;
  std::vector<std::pair<std::string, double>> selected;
  double threshold = 0.0;
  bool fallback_used = false;  // no score cleared the threshold; argmax used
};

// One single-turn executor demonstration: the sub-question, the evidence pool
// exactly as presented (display index = position), the validated reply turn,
// and the selection that grounded it.
struct ExecutorRecord {
  std::string sub_question;
  std::vector<dataset::SupportingFact> presented_facts;
  std::string turn_text;  // canonical rendering of `turn`
  tags::ParsedTurn turn;
  EvidenceSelection selection;
};

// Derives one declarative answer sentence for a sub-question from the golden
// evidence alone. Regenerates (fresh seed) when the reply normalizes to
// nothing; EmptyAnswer after `content_retries` failed generations.
// Throws EmptyInput when `golden` is empty.
std::string answer_subquestion(const std::string& sub_question,
                               const std::vector<dataset::SupportingFact>& golden,
                               backends::GenerationBackend& gen,
                               const prompts::PromptSet& prompt_set,
                               const backends::RetryPolicy& retry = {},
                               int content_retries = 3);

// Embeds the answer sentence and every golden fact, keeps facts with cosine
// strictly above `tau`; when none clears the bar, falls back to the single
// best-scoring fact (ties -> lowest display index).
// Throws EmptyInput when `golden` is empty; embedding faults propagate.
EvidenceSelection select_evidence(const std::string& answer_sentence,
                                  const std::vector<dataset::SupportingFact>& golden,
                                  double tau,
                                  backends::EmbeddingBackend& emb,
                                  const backends::RetryPolicy& retry = {});

// Synthesizes the executor's think/select/answer turn over the full pool
// (distractors included). The reply must select exactly the display indices
// of `selection` within `pool` and repeat `selection.answer_sentence`
// verbatim; GroundingError after `content_retries` rejected generations.
ExecutorRecord synth_cot(const std::string& sub_question,
                         const EvidenceSelection& selection,
                         const std::vector<dataset::SupportingFact>& pool,
                         backends::GenerationBackend& gen,
                         const prompts::PromptSet& prompt_set,
                         const backends::RetryPolicy& retry = {},
                         int content_retries = 3);

// The "Question: ... Supporting evidence(s): ..." user blocks, exposed so
// scripted fixtures and the agent runtime build byte-identical prompts.
std::string subanswer_user_block(const std::string& sub_question,
                                 const std::vector<dataset::SupportingFact>& golden);
std::string synth_cot_user_block(const std::string& sub_question,
                                 const EvidenceSelection& selection,
                                 const std::vector<dataset::SupportingFact>& pool);

}  // namespace evipath::executor

#include "evipath/executor.hpp"

#include <algorithm>
#include <set>

#include "evipath/errors.hpp"
#include "evipath/metrics.hpp"
#include "evipath/util.hpp"

namespace evipath::executor {

namespace {

using backends::ChatMessage;
using backends::GenerationRequest;
using backends::Role;

GenerationRequest make_request(const std::string& system, const std::string& user,
                               uint64_t seed) {
  GenerationRequest req;
  req.messages = {{Role::system, system}, {Role::user, user}};
  req.seed = seed;
  return req;
}

// Lenient extraction: prefer an <answer> body, otherwise take the raw reply.
std::string extract_answer_text(const std::string& reply, tags::Dialect dialect) {
  try {
    tags::ParseOptions opts;
    opts.mode = tags::ParseMode::lenient;
    tags::ParsedTurn turn = tags::parse_turn(reply, dialect, opts);
    if (turn.is_final()) return turn.final_answer().text;
    if (turn.is_select()) return turn.select_and_answer().answer_sentence;
  } catch (const TagError&) {
    // fall through to the raw reply
  }
  return std::string(util::trim(reply));
}

}  // namespace

std::string subanswer_user_block(const std::string& sub_question,
                                 const std::vector<dataset::SupportingFact>& golden) {
  std::string user = "Question: " + sub_question + "\nSupporting evidence:\n";
  for (const auto& fact : golden) user += dataset::presentation_line(fact) + "\n";
  user.pop_back();
  return user;
}

std::string answer_subquestion(const std::string& sub_question,
                               const std::vector<dataset::SupportingFact>& golden,
                               backends::GenerationBackend& gen,
                               const prompts::PromptSet& prompt_set,
                               const backends::RetryPolicy& retry, int content_retries) {
  if (golden.empty()) throw EmptyInput("answer_subquestion: no golden evidence");
  const std::string user = subanswer_user_block(sub_question, golden);
  for (int attempt = 0; attempt < content_retries; ++attempt) {
    std::string reply = backends::generate(
        gen, make_request(prompt_set.subanswer_synthesis, user, uint64_t(attempt)), retry);
    std::string text = extract_answer_text(reply, tags::Dialect::plain);
    if (!metrics::normalize(text).empty()) return text;
  }
  throw EmptyAnswer("no usable answer sentence for sub-question: " + sub_question);
}

EvidenceSelection select_evidence(const std::string& answer_sentence,
                                  const std::vector<dataset::SupportingFact>& golden,
                                  double tau,
                                  backends::EmbeddingBackend& emb,
                                  const backends::RetryPolicy& retry) {
  if (golden.empty()) throw EmptyInput("select_evidence: no golden evidence");
  std::vector<std::string> texts;
  texts.reserve(golden.size() + 1);
  texts.push_back(answer_sentence);
  for (const auto& fact : golden) texts.push_back(fact.content);

  std::vector<backends::EmbeddingVector> vecs = backends::embed(emb, texts, retry);
  EvidenceSelection sel;
  sel.answer_sentence = answer_sentence;
  sel.threshold = tau;

  std::vector<double> scores(golden.size());
  for (size_t i = 0; i < golden.size(); ++i) scores[i] = backends::cosine(vecs[0], vecs[i + 1]);

  for (size_t i = 0; i < golden.size(); ++i)
    if (scores[i] > tau) sel.selected.emplace_back(golden[i].id, scores[i]);

  if (sel.selected.empty()) {
    // strictly-greater comparison keeps argmax at the first (lowest) index
    size_t best = 0;
    for (size_t i = 1; i < golden.size(); ++i)
      if (scores[i] > scores[best]) best = i;
    sel.selected.emplace_back(golden[best].id, scores[best]);
    sel.fallback_used = true;
  }
  return sel;
}

std::string synth_cot_user_block(const std::string& sub_question,
                                 const EvidenceSelection& selection,
                                 const std::vector<dataset::SupportingFact>& pool) {
  std::string user = "Question: " + sub_question + "\nSupporting evidence:\n";
  for (size_t i = 0; i < pool.size(); ++i)
    user += "[" + std::to_string(i) + "] " + dataset::presentation_line(pool[i]) + "\n";
  user += "Answer: " + selection.answer_sentence + "\nGolden evidence: ";
  bool first = true;
  for (const auto& [id, score] : selection.selected) {
    auto it = std::find_if(pool.begin(), pool.end(),
                           [&](const dataset::SupportingFact& f) { return f.id == id; });
    if (it == pool.end())
      throw GroundingError("selected fact '" + id + "' is not in the presented pool");
    if (!first) user += ", ";
    first = false;
    size_t idx = size_t(it - pool.begin());
    user += "[" + std::to_string(idx) + "] " + dataset::presentation_line(*it);
  }
  return user;
}

ExecutorRecord synth_cot(const std::string& sub_question,
                         const EvidenceSelection& selection,
                         const std::vector<dataset::SupportingFact>& pool,
                         backends::GenerationBackend& gen,
                         const prompts::PromptSet& prompt_set,
                         const backends::RetryPolicy& retry, int content_retries) {
  const std::string user = synth_cot_user_block(sub_question, selection, pool);

  std::set<int> expected;
  for (const auto& [id, score] : selection.selected)
    for (size_t i = 0; i < pool.size(); ++i)
      if (pool[i].id == id) expected.insert(int(i));

  std::string last_reason = "no generation attempted";
  for (int attempt = 0; attempt < content_retries; ++attempt) {
    std::string reply = backends::generate(
        gen, make_request(prompt_set.executor_synthesis, user, uint64_t(attempt)), retry);
    tags::ParsedTurn turn;
    try {
      turn = tags::parse_turn(reply, tags::Dialect::plain);
    } catch (const TagError& e) {
      last_reason = e.what();
      continue;
    }
    if (!turn.is_select()) {
      last_reason = "reply is not a select/answer turn";
      continue;
    }
    const tags::SelectAndAnswer& sa = turn.select_and_answer();
    std::set<int> got(sa.selected.begin(), sa.selected.end());
    if (got != expected) {
      last_reason = "selected indices do not match the grounded selection";
      continue;
    }
    if (util::trim(sa.answer_sentence) != util::trim(selection.answer_sentence)) {
      last_reason = "answer sentence was not repeated verbatim";
      continue;
    }
    ExecutorRecord record;
    record.sub_question = sub_question;
    record.presented_facts = pool;
    record.turn = turn;
    record.turn_text = tags::render_turn(turn, tags::Dialect::plain);
    record.selection = selection;
    return record;
  }
  throw GroundingError("executor turn rejected for '" + sub_question + "': " + last_reason);
}

}  // namespace evipath::executor

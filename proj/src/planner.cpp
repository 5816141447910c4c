#include "evipath/planner.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <optional>

#include "evipath/errors.hpp"
#include "evipath/metrics.hpp"
#include "evipath/util.hpp"

namespace evipath::planner {

namespace {

using backends::ChatMessage;
using backends::GenerationRequest;
using backends::Role;

std::string lower_ascii(std::string_view s) { return util::to_lower_ascii(std::string(s)); }

// Case-insensitive (ASCII) substring search; entity names in the datasets
// differ at most by ASCII letter case between question and KG subject.
size_t ci_find(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return std::string::npos;
  std::string h = lower_ascii(haystack);
  std::string n = lower_ascii(needle);
  return h.find(n);
}

// "Naresh Kumar (tennis)" -> "Naresh Kumar"; plain names pass through.
std::string base_name(const std::string& subject) {
  size_t pos = subject.find(" (");
  return pos == std::string::npos ? subject : subject.substr(0, pos);
}

std::vector<std::string> pool_subjects(const dataset::QaSample& sample) {
  std::vector<std::string> subjects;
  for (const auto& fact : sample.facts) {
    if (fact.kind != dataset::FactKind::kg_triple) continue;
    if (auto triple = dataset::parse_triple(fact.content)) {
      if (std::find(subjects.begin(), subjects.end(), triple->subject) == subjects.end())
        subjects.push_back(triple->subject);
    }
  }
  return subjects;
}

bool already_bound(const std::vector<tags::CandidateBinding>& bindings,
                   const std::string& name) {
  std::string n = lower_ascii(name);
  return std::any_of(bindings.begin(), bindings.end(), [&](const tags::CandidateBinding& b) {
    return lower_ascii(b.surface) == n;
  });
}

// Subjects mentioned in `text` that are not bound yet, ordered by first
// occurrence (ties by pool order). The surface keeps the text's spelling.
std::vector<tags::CandidateBinding> scan_new_entities(
    const std::string& text, const dataset::QaSample& sample,
    const std::vector<tags::CandidateBinding>& bindings) {
  struct Hit {
    size_t pos;
    std::string surface;
  };
  std::vector<Hit> hits;
  for (const std::string& subject : pool_subjects(sample)) {
    std::string base = base_name(subject);
    size_t pos = ci_find(text, base);
    if (pos == std::string::npos) continue;
    std::string surface = text.substr(pos, base.size());
    if (already_bound(bindings, surface) || already_bound(bindings, subject)) continue;
    if (std::any_of(hits.begin(), hits.end(), [&](const Hit& h) {
          return lower_ascii(h.surface) == lower_ascii(surface);
        }))
      continue;
    hits.push_back({pos, std::move(surface)});
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const Hit& a, const Hit& b) { return a.pos < b.pos; });
  std::vector<tags::CandidateBinding> fresh;
  int next = int(bindings.size());
  for (Hit& h : hits) fresh.push_back({next++, std::move(h.surface)});
  return fresh;
}

bool pronoun_head(const std::string& question) {
  size_t i = 0;
  while (i < question.size() && !std::isalpha(static_cast<unsigned char>(question[i]))) ++i;
  size_t j = i;
  while (j < question.size() && std::isalpha(static_cast<unsigned char>(question[j]))) ++j;
  std::string head = lower_ascii(question.substr(i, j - i));
  return head == "this" || head == "these" || head == "it" || head == "they";
}

std::vector<dataset::SupportingFact> golden_facts(const dataset::QaSample& sample) {
  std::vector<dataset::SupportingFact> out;
  for (const auto& fact : sample.facts)
    if (sample.is_golden(fact.id)) out.push_back(fact);
  return out;
}

struct TurnValidationError {
  std::exception_ptr error;
};

// Parses and vets one generated planner turn; throws on protocol violations
// so the caller can regenerate.
tags::ParsedTurn vet_turn(const std::string& reply, tags::Dialect dialect,
                          const std::vector<tags::CandidateBinding>& bindings,
                          const EpisodeLimits& limits, bool first_turn, Plan* plan_out) {
  tags::ParseOptions opts;
  opts.bindings = bindings;
  tags::ParsedTurn turn = tags::parse_turn(reply, dialect, opts);

  if (!turn.think)
    throw TagError(TagErrorKind::missing_body, 0, "planner turn has no think block");
  if (turn.is_select() || turn.is_no_info())
    throw TagError(TagErrorKind::missing_body, 0,
                   "planner turn must carry an action or a final answer");

  if (first_turn) {
    Plan plan{extract_plan(*turn.think)};
    if (plan.sub_questions.empty())
      throw MalformedPlan("first think block contains no numbered plan");
    if (int(plan.sub_questions.size()) > limits.max_plan_len)
      throw MalformedPlan("plan length " + std::to_string(plan.sub_questions.size()) +
                          " exceeds the cap of " + std::to_string(limits.max_plan_len));
    if (plan_out) *plan_out = std::move(plan);
  }

  if (turn.is_action()) {
    const auto& calls = turn.actions();
    if (int(calls.size()) > limits.max_actions_per_step)
      throw StepBudgetExceeded("turn issues " + std::to_string(calls.size()) +
                               " searches; the per-step cap is " +
                               std::to_string(limits.max_actions_per_step));
    for (const auto& call : calls)
      if (pronoun_head(call.question))
        throw TagError(TagErrorKind::malformed_search_call, 0,
                       "search question starts with a pronoun: " + call.question);
  } else if (turn.is_final()) {
    if (metrics::normalize(turn.final_answer().text).empty())
      throw EmptyAnswer("final answer normalizes to nothing");
  }
  return turn;
}

tags::ParsedTurn generate_turn(std::vector<ChatMessage>& messages, tags::Dialect dialect,
                               backends::GenerationBackend& gen,
                               const std::vector<tags::CandidateBinding>& bindings,
                               const EpisodeLimits& limits, bool first_turn, Plan* plan_out,
                               const backends::RetryPolicy& retry, int content_retries) {
  std::exception_ptr last;
  for (int attempt = 0; attempt < content_retries; ++attempt) {
    GenerationRequest req;
    req.messages = messages;
    req.seed = uint64_t(attempt);
    std::string reply = backends::generate(gen, req, retry);
    try {
      return vet_turn(reply, dialect, bindings, limits, first_turn, plan_out);
    } catch (const Error&) {
      last = std::current_exception();
    }
  }
  std::rethrow_exception(last);
}

}  // namespace

std::vector<std::string> extract_plan(const std::string& think_text) {
  std::vector<std::string> items;
  for (std::string_view line : util::split_lines(think_text)) {
    std::string_view t = util::trim(line);
    size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    if (i == 0 || i >= t.size() || t[i] != '.') continue;
    std::string_view rest = util::trim(t.substr(i + 1));
    if (!rest.empty()) items.emplace_back(rest);
  }
  return items;
}

std::vector<tags::CandidateBinding> derive_initial_bindings(const dataset::QaSample& sample) {
  std::vector<tags::CandidateBinding> none;
  return scan_new_entities(sample.question, sample, none);
}

std::string annotate_candidates(const std::string& sentence, const dataset::QaSample& sample,
                                std::vector<tags::CandidateBinding>& bindings) {
  std::vector<tags::CandidateBinding> fresh = scan_new_entities(sentence, sample, bindings);
  if (fresh.empty()) return sentence;
  std::string out = sentence + " Candidate: ";
  for (size_t i = 0; i < fresh.size(); ++i) {
    if (i) out += ", ";
    out += "[" + std::to_string(fresh[i].index) + "] " + fresh[i].surface;
  }
  bindings.insert(bindings.end(), fresh.begin(), fresh.end());
  return out;
}

std::string strip_candidate_annotation(const std::string& line) {
  size_t pos = line.rfind(" Candidate: [");
  if (pos == std::string::npos) return line;
  return std::string(util::rtrim(std::string_view(line).substr(0, pos)));
}

std::string planner_user_block(const dataset::QaSample& sample, tags::Dialect dialect,
                               const std::vector<tags::CandidateBinding>& bindings) {
  std::string block = "Question: " + sample.question + "\nAnswer: " + sample.answer +
                      "\nSupporting evidences:\n";
  for (const auto& fact : golden_facts(sample)) block += dataset::presentation_line(fact) + "\n";
  if (dialect == tags::Dialect::entity_anchored) {
    block += "\nQuestion: " + sample.question + " " + tags::format_candidate_list(bindings) +
             "\nAnswer: " + sample.answer;
  } else {
    block.pop_back();
  }
  return block;
}

std::string observation_prefix(tags::Dialect dialect) {
  return dialect == tags::Dialect::plain ? "Obs: " : "Observation: \n";
}

Plan decompose(const dataset::QaSample& sample, tags::Dialect dialect,
               backends::GenerationBackend& gen, const prompts::PromptSet& prompt_set,
               const EpisodeLimits& limits, const backends::RetryPolicy& retry,
               int content_retries) {
  std::vector<tags::CandidateBinding> bindings;
  if (dialect == tags::Dialect::entity_anchored) bindings = derive_initial_bindings(sample);
  const std::string& system = dialect == tags::Dialect::plain
                                  ? prompt_set.planner_synthesis_plain
                                  : prompt_set.planner_synthesis_entity;
  std::vector<ChatMessage> messages = {
      {Role::system, system},
      {Role::user, planner_user_block(sample, dialect, bindings)}};
  Plan plan;
  generate_turn(messages, dialect, gen, bindings, limits, /*first_turn=*/true, &plan, retry,
                content_retries);
  return plan;
}

PlannerPath run_episode(const dataset::QaSample& sample, tags::Dialect dialect,
                        backends::GenerationBackend& gen, const StepOracle& oracle,
                        const prompts::PromptSet& prompt_set, const EpisodeLimits& limits,
                        const backends::RetryPolicy& retry, int content_retries) {
  PlannerPath path;
  std::vector<tags::CandidateBinding> bindings;
  if (dialect == tags::Dialect::entity_anchored) bindings = derive_initial_bindings(sample);
  path.initial_bindings = bindings;

  const std::string& system = dialect == tags::Dialect::plain
                                  ? prompt_set.planner_synthesis_plain
                                  : prompt_set.planner_synthesis_entity;
  std::vector<ChatMessage> messages = {
      {Role::system, system},
      {Role::user, planner_user_block(sample, dialect, bindings)}};

  bool first = true;
  for (;;) {
    tags::ParsedTurn turn =
        generate_turn(messages, dialect, gen, bindings, limits, first,
                      first ? &path.plan : nullptr, retry, content_retries);
    first = false;
    messages.push_back({Role::assistant, tags::render_turn(turn, dialect)});
    path.turns.push_back(turn);

    if (turn.is_final()) {
      path.final_answer = std::string(util::trim(turn.final_answer().text));
      break;
    }
    if (path.step_count == limits.max_steps)
      throw StepBudgetExceeded("episode did not conclude within " +
                               std::to_string(limits.max_steps) + " action steps");
    ++path.step_count;

    std::string content;
    for (const auto& call : turn.actions()) {
      std::string sentence = oracle(call);
      if (dialect == tags::Dialect::entity_anchored)
        sentence = annotate_candidates(sentence, sample, bindings);
      if (!content.empty()) content += "\n";
      content += sentence;
    }
    path.observations.push_back(content);
    messages.push_back({Role::user, observation_prefix(dialect) + content});
  }
  return path;
}

}  // namespace evipath::planner

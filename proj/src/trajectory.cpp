#include "evipath/trajectory.hpp"

#include <utility>

#include "evipath/errors.hpp"
#include "evipath/metrics.hpp"
#include "evipath/util.hpp"

namespace evipath::trajectory {

namespace {

using backends::ChatMessage;
using backends::Role;
using nlohmann::ordered_json;

ordered_json fact_to_json(const dataset::SupportingFact& fact) {
  ordered_json j;
  j["id"] = fact.id;
  j["kind"] = std::string(dataset::to_string(fact.kind));
  j["content"] = fact.content;
  if (fact.source_title)
    j["source_title"] = *fact.source_title;
  else
    j["source_title"] = nullptr;
  return j;
}

dataset::SupportingFact fact_from_json(const ordered_json& j, size_t line) {
  dataset::SupportingFact fact;
  if (!j.is_object() || !j.contains("id") || !j.contains("kind") || !j.contains("content"))
    throw SchemaError(line, "records", "malformed supporting fact");
  fact.id = j.at("id").get<std::string>();
  auto kind = dataset::fact_kind_from(j.at("kind").get<std::string>());
  if (!kind) throw SchemaError(line, "records", "unknown fact kind");
  fact.kind = *kind;
  fact.content = j.at("content").get<std::string>();
  if (j.contains("source_title") && !j.at("source_title").is_null())
    fact.source_title = j.at("source_title").get<std::string>();
  return fact;
}

const ordered_json& require(const ordered_json& j, const char* key, size_t line) {
  if (!j.is_object() || !j.contains(key))
    throw SchemaError(line, key, std::string("missing field '") + key + "'");
  return j.at(key);
}

size_t count_calls(const planner::PlannerPath& path) {
  size_t total = 0;
  for (const auto& turn : path.turns)
    if (turn.is_action()) total += turn.actions().size();
  return total;
}

}  // namespace

Trajectory assemble(const dataset::QaSample& sample, tags::Dialect dialect,
                    const planner::PlannerPath& path,
                    std::vector<executor::ExecutorRecord> records) {
  if (path.turns.empty() || !path.turns.back().is_final())
    throw CountMismatch("episode does not end in a final-answer turn");
  size_t action_turns = path.turns.size() - 1;
  for (size_t i = 0; i < action_turns; ++i)
    if (!path.turns[i].is_action())
      throw CountMismatch("turn " + std::to_string(i) + " is not an action turn");
  if (path.observations.size() != action_turns)
    throw CountMismatch(std::to_string(path.observations.size()) + " observations for " +
                        std::to_string(action_turns) + " action turns");
  if (size_t(path.step_count) != action_turns)
    throw CountMismatch("step_count disagrees with the turn sequence");

  size_t total_calls = count_calls(path);
  if (records.size() != total_calls)
    throw CountMismatch(std::to_string(records.size()) + " executor records for " +
                        std::to_string(total_calls) + " search calls");

  size_t idx = 0;
  for (size_t t = 0; t < action_turns; ++t) {
    const auto& calls = path.turns[t].actions();
    auto lines = util::split_lines(path.observations[t]);
    if (lines.size() != calls.size())
      throw CountMismatch("observation " + std::to_string(t) + " has " +
                          std::to_string(lines.size()) + " lines for " +
                          std::to_string(calls.size()) + " calls");
    for (size_t c = 0; c < calls.size(); ++c, ++idx) {
      const executor::ExecutorRecord& rec = records[idx];
      if (rec.sub_question != calls[c].question)
        throw CountMismatch("record " + std::to_string(idx) +
                            " does not answer the paired search call");
      std::string line = planner::strip_candidate_annotation(std::string(lines[c]));
      if (line != rec.selection.answer_sentence)
        throw ObservationMismatch("observation line for record " + std::to_string(idx) +
                                  " drifted from the executor answer");
    }
  }

  for (size_t r = 0; r < records.size(); ++r) {
    for (const auto& [id, score] : records[r].selection.selected)
      if (!sample.is_golden(id))
        throw CitationError("record " + std::to_string(r) + " cites non-golden fact '" + id +
                            "'");
    for (const auto& fact : records[r].presented_facts)
      if (sample.find_fact(fact.id) == nullptr)
        throw CitationError("record " + std::to_string(r) + " presents unknown fact '" +
                            fact.id + "'");
  }

  if (!metrics::exact_match(path.final_answer, sample.answer))
    throw AnswerMismatch("final answer '" + path.final_answer + "' does not match gold '" +
                         sample.answer + "'");

  Trajectory traj;
  traj.sample_id = sample.sample_id;
  traj.question = sample.question;
  traj.answer = sample.answer;
  traj.dataset_tag = sample.dataset_tag;
  traj.dialect = dialect;
  traj.path = path;
  traj.records = std::move(records);
  return traj;
}

SftRecord format_planner(const Trajectory& trajectory, const prompts::PromptSet& prompt_set) {
  const bool entity = trajectory.dialect == tags::Dialect::entity_anchored;
  SftRecord record;
  record.kind = "planner_multi_turn";
  record.messages.push_back(
      {Role::system,
       entity ? prompt_set.planner_train_entity : prompt_set.planner_train_plain});
  std::string opening = "Question: " + trajectory.question;
  if (entity)
    opening += " " + tags::format_candidate_list(trajectory.path.initial_bindings);
  record.messages.push_back({Role::user, opening});

  size_t obs = 0;
  for (const auto& turn : trajectory.path.turns) {
    record.messages.push_back({Role::assistant, tags::render_turn(turn, trajectory.dialect)});
    if (turn.is_action())
      record.messages.push_back({Role::user, planner::observation_prefix(trajectory.dialect) +
                                                 trajectory.path.observations[obs++]});
  }
  record.meta = {{"sample_id", trajectory.sample_id},
                 {"dataset_tag", trajectory.dataset_tag},
                 {"dialect", std::string(tags::to_string(trajectory.dialect))},
                 {"prompt_version", prompt_set.version}};
  return record;
}

std::string executor_user_block(const std::string& sub_question,
                                const std::vector<dataset::SupportingFact>& facts) {
  std::string block = "Question: " + sub_question + "\nSupporting evidences:";
  for (size_t i = 0; i < facts.size(); ++i)
    block += "\n[" + std::to_string(i) + "] " + dataset::presentation_line(facts[i]);
  return block;
}

std::vector<SftRecord> format_executor(const Trajectory& trajectory,
                                       const prompts::PromptSet& prompt_set) {
  std::vector<SftRecord> out;
  for (size_t i = 0; i < trajectory.records.size(); ++i) {
    const executor::ExecutorRecord& rec = trajectory.records[i];
    SftRecord record;
    record.kind = "executor_single_turn";
    record.messages = {
        {Role::system, prompt_set.executor_train},
        {Role::user, executor_user_block(rec.sub_question, rec.presented_facts)},
        {Role::assistant, rec.turn_text}};
    record.meta = {{"sample_id", trajectory.sample_id},
                   {"dataset_tag", trajectory.dataset_tag},
                   {"prompt_version", prompt_set.version},
                   {"record_index", i}};
    out.push_back(std::move(record));
  }
  return out;
}

void write_sft(const std::filesystem::path& path, const std::vector<SftRecord>& records) {
  std::string out;
  for (const SftRecord& record : records) {
    ordered_json j;
    j["kind"] = record.kind;
    j["messages"] = ordered_json::array();
    for (const ChatMessage& m : record.messages)
      j["messages"].push_back(
          {{"role", std::string(backends::to_string(m.role))}, {"content", m.content}});
    j["meta"] = record.meta;
    out += j.dump();
    out += '\n';
  }
  util::write_file(path.string(), out);
}

std::vector<SftRecord> read_sft(const std::filesystem::path& path) {
  std::vector<SftRecord> records;
  util::for_each_jsonl(path.string(), [&](size_t line, const nlohmann::ordered_json& raw) {
    ordered_json j = raw;
    SftRecord record;
    record.kind = require(j, "kind", line).get<std::string>();
    if (record.kind != "planner_multi_turn" && record.kind != "executor_single_turn")
      throw SchemaError(line, "kind", "unknown SFT record kind '" + record.kind + "'");
    const ordered_json& msgs = require(j, "messages", line);
    if (!msgs.is_array() || msgs.empty())
      throw SchemaError(line, "messages", "messages must be a non-empty array");
    for (const auto& m : msgs) {
      if (!m.is_object() || !m.contains("role") || !m.contains("content"))
        throw SchemaError(line, "messages", "malformed chat message");
      auto role = backends::role_from(m.at("role").get<std::string>());
      if (!role) throw SchemaError(line, "messages", "unknown role");
      record.messages.push_back({*role, m.at("content").get<std::string>()});
    }
    const ordered_json& meta = require(j, "meta", line);
    if (!meta.is_object()) throw SchemaError(line, "meta", "meta must be an object");
    record.meta = meta;
    records.push_back(std::move(record));
  });
  return records;
}

void write_trajectories(const std::filesystem::path& path,
                        const std::vector<Trajectory>& trajectories) {
  std::string out;
  for (const Trajectory& traj : trajectories) {
    ordered_json j;
    j["sample_id"] = traj.sample_id;
    j["question"] = traj.question;
    j["answer"] = traj.answer;
    j["dataset_tag"] = traj.dataset_tag;
    j["dialect"] = std::string(tags::to_string(traj.dialect));
    j["plan"] = traj.path.plan.sub_questions;
    j["turns"] = ordered_json::array();
    for (const auto& turn : traj.path.turns)
      j["turns"].push_back(tags::render_turn(turn, traj.dialect));
    j["observations"] = traj.path.observations;
    j["initial_bindings"] = ordered_json::array();
    for (const auto& b : traj.path.initial_bindings)
      j["initial_bindings"].push_back({{"index", b.index}, {"surface", b.surface}});
    j["final_answer"] = traj.path.final_answer;
    j["step_count"] = traj.path.step_count;
    j["records"] = ordered_json::array();
    for (const auto& rec : traj.records) {
      ordered_json r;
      r["sub_question"] = rec.sub_question;
      r["presented_facts"] = ordered_json::array();
      for (const auto& fact : rec.presented_facts)
        r["presented_facts"].push_back(fact_to_json(fact));
      r["turn"] = rec.turn_text;
      ordered_json sel;
      sel["answer_sentence"] = rec.selection.answer_sentence;
      sel["selected"] = ordered_json::array();
      for (const auto& [id, score] : rec.selection.selected)
        sel["selected"].push_back({{"id", id}, {"score", score}});
      sel["threshold"] = rec.selection.threshold;
      sel["fallback_used"] = rec.selection.fallback_used;
      r["selection"] = sel;
      j["records"].push_back(std::move(r));
    }
    out += j.dump();
    out += '\n';
  }
  util::write_file(path.string(), out);
}

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path) {
  std::vector<Trajectory> out;
  util::for_each_jsonl(path.string(), [&](size_t line, const nlohmann::ordered_json& raw) {
    ordered_json j = raw;
    Trajectory traj;
    traj.sample_id = require(j, "sample_id", line).get<std::string>();
    traj.question = require(j, "question", line).get<std::string>();
    traj.answer = require(j, "answer", line).get<std::string>();
    traj.dataset_tag = require(j, "dataset_tag", line).get<std::string>();
    auto dialect = tags::dialect_from(require(j, "dialect", line).get<std::string>());
    if (!dialect) throw SchemaError(line, "dialect", "unknown dialect");
    traj.dialect = *dialect;

    traj.path.plan.sub_questions =
        require(j, "plan", line).get<std::vector<std::string>>();
    traj.path.observations =
        require(j, "observations", line).get<std::vector<std::string>>();
    for (const auto& b : require(j, "initial_bindings", line))
      traj.path.initial_bindings.push_back(
          {b.at("index").get<int>(), b.at("surface").get<std::string>()});
    traj.path.final_answer = require(j, "final_answer", line).get<std::string>();
    traj.path.step_count = require(j, "step_count", line).get<int>();

    // Turns are re-parsed strictly, resolving entity surfaces against the
    // bindings known *before* each turn (initial + prior annotations).
    std::vector<tags::CandidateBinding> bindings = traj.path.initial_bindings;
    size_t obs = 0;
    size_t turn_no = 0;
    for (const auto& t : require(j, "turns", line)) {
      std::string text = t.get<std::string>();
      tags::ParseOptions opts;
      opts.bindings = bindings;
      tags::ParsedTurn turn;
      try {
        turn = tags::parse_turn(text, traj.dialect, opts);
      } catch (const TagError& e) {
        throw SchemaError(line, "turns",
                          "sample '" + traj.sample_id + "' turn " + std::to_string(turn_no) +
                              " does not parse: " + e.what());
      }
      if (turn.is_action() && obs < traj.path.observations.size()) {
        try {
          tags::Observation parsed = tags::parse_observation(traj.path.observations[obs]);
          for (auto& b : parsed.bindings) bindings.push_back(std::move(b));
        } catch (const Error& e) {
          throw SchemaError(line, "observations",
                            "sample '" + traj.sample_id + "': " + e.what());
        }
        ++obs;
      }
      traj.path.turns.push_back(std::move(turn));
      ++turn_no;
    }

    for (const auto& r : require(j, "records", line)) {
      executor::ExecutorRecord rec;
      rec.sub_question = require(r, "sub_question", line).get<std::string>();
      for (const auto& f : require(r, "presented_facts", line))
        rec.presented_facts.push_back(fact_from_json(f, line));
      std::string text = require(r, "turn", line).get<std::string>();
      try {
        rec.turn = tags::parse_turn(text, tags::Dialect::plain);
      } catch (const TagError& e) {
        throw SchemaError(line, "records",
                          "sample '" + traj.sample_id +
                              "' executor turn does not parse: " + e.what());
      }
      rec.turn_text = tags::render_turn(rec.turn, tags::Dialect::plain);
      const ordered_json& sel = require(r, "selection", line);
      rec.selection.answer_sentence = require(sel, "answer_sentence", line).get<std::string>();
      for (const auto& p : require(sel, "selected", line))
        rec.selection.selected.emplace_back(p.at("id").get<std::string>(),
                                            p.at("score").get<double>());
      rec.selection.threshold = require(sel, "threshold", line).get<double>();
      rec.selection.fallback_used = require(sel, "fallback_used", line).get<bool>();
      traj.records.push_back(std::move(rec));
    }
    out.push_back(std::move(traj));
  });
  return out;
}

}  // namespace evipath::trajectory

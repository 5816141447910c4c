#include "evipath/prompts.hpp"

#include "evipath/util.hpp"

namespace evipath::prompts {

namespace {

const char kPlannerSynthesisEntity[] =
    "Your task is to provide a reasoning path to answer a complex question.\n"
    "You will be given a question, the answer of the question, and supporting evidence to obtain the answer.\n"
    "You need to:\n"
    "1. Make a plan about how to answer this question by decompose it into multiple steps.\n"
    "2. Solve the problem in a step-by-step manner.\n"
    "Put your thoughts between <think> and </think> tags.\n"
    "You can use the Search(entity, \"question\") function to get information.\n"
    "Extract candidate entity from the intermediate subquestions with [X].\n"
    "Label the final answer with <answer> *** </answer>.";

const char kPlannerSynthesisPlain[] =
    "Your task is to provide a reasoning path to answer a complex question.\n"
    "You will be given a question, the answer of the question, and supporting evidence to obtain the answer.\n"
    "You need to:\n"
    "1. Make a plan about how to answer this question by decompose it into multiple steps.\n"
    "2. Solve the problem in a step-by-step manner.\n"
    "Put your thoughts between <think> and </think> tags.\n"
    "You can use the Search(\"question\") function to get information from supporting evidence.\n"
    "Please note the the content within the Search function should be a question (interrogative sentence).\n"
    "When issuing a search query, please refrain from using pronouns like \"this\", \"these\", etc., and use the full entity names instead.\n"
    "Label the final answer with <answer> *** </answer>.";

const char kExecutorSynthesis[] =
    "Your task is to provide reasoning path to answer a question based on some supporting evidence.\n"
    "Note that there are some disturbance terms within the supporting evidence.\n"
    "You will be given a question, the answer of the question, and the index of golden supporting evidence to obtain the answer.\n"
    "You need to:\n"
    "1. Identify the requested information and summarize the information provided in the golden evidence.\n"
    "Please put your thoughts between <think> and </think> tags. Please do NOT consider other supporting evidence other than the golden evidence.\n"
    "2. Identify the index of the ground truth supporting evidence. Put the index between <select> and </select> tags.\n"
    "3. Summarize the answer with one sentence. Put the answer between <answer> and </answer> tags.";

const char kSubanswerSynthesis[] =
    "Your task is to answer a question based on the given supporting evidence.\n"
    "You will be given a question and the golden supporting evidence that contains the answer.\n"
    "Answer the question with one complete declarative sentence.\n"
    "Put the answer between <answer> and </answer> tags.";

const char kPlannerTrainPlain[] =
    "Your task is to provide a reasoning path to answer a complex question.\n"
    "You will be given a question and the answer of the question.\n"
    "You need to:\n"
    "1. Make a plan about how to answer this question by decompose it into multiple steps.\n"
    "2. Solve the problem in a step-by-step manner.\n"
    "Put your thoughts between <think> and </think> tags.\n"
    "You can use the Search(\"question\") function to get information from supporting evidence.\n"
    "Please note the the content within the Search function should be a question (interrogative sentence).\n"
    "When issuing a search query, please refrain from using pronouns like \"this\", \"these\", etc., and use the full entity names instead.\n"
    "Label the final answer within <answer> *** </answer>.";

const char kPlannerTrainEntity[] =
    "Your task is to provide a reasoning path to answer a complex question.\n"
    "You will be given a question.\n"
    "You need to:\n"
    "1. Make a plan about how to answer this question by decompose it into multiple steps.\n"
    "2. Solve the problem in a step-by-step manner.\n"
    "Put your thoughts between <think> and </think> tags.\n"
    "You can use the Search(entity, \"question\") function to get information.\n"
    "Extract candidate entity from the intermediate subquestions with [X].\n"
    "Label the final answer with <answer> *** </answer>.";

const char kExecutorTrain[] =
    "Your task is to answer a question based on some supporting evidence.\n"
    "Note that there are some disturbance terms within the supporting evidence.\n"
    "You will be given a question and a list of supporting evidence.\n"
    "You need to:\n"
    "1. Identify the requested information from the question. Review all supporting evidence, summarize the information provided in evidences that support answering the question. Please put your thoughts between <think> and </think> tags.\n"
    "2. Identify the index of the golden supporting evidence. Put the index between <select> and </select> tags. If multiple supporting evidence contain the answer, select all of them. If there are no evidence matches, respond with \"No relevant information found.\" and do not output any other contents.\n"
    "3. Summarize the answer with one complete declarative sentence. Put the answer between <answer> and </answer> tags.\n"
    "Please use the following template:\n"
    "<think> ... </think>\n"
    "<select> [X] </select>\n"
    "<answer> The complete answer sentence. </answer>";

struct Field {
  const char* file;
  std::string PromptSet::*member;
};

constexpr Field kFields[] = {
    {"planner_synthesis_plain.txt", &PromptSet::planner_synthesis_plain},
    {"planner_synthesis_entity.txt", &PromptSet::planner_synthesis_entity},
    {"executor_synthesis.txt", &PromptSet::executor_synthesis},
    {"subanswer_synthesis.txt", &PromptSet::subanswer_synthesis},
    {"planner_train_plain.txt", &PromptSet::planner_train_plain},
    {"planner_train_entity.txt", &PromptSet::planner_train_entity},
    {"executor_train.txt", &PromptSet::executor_train},
};

}  // namespace

const PromptSet& builtin() {
  static const PromptSet set = [] {
    PromptSet s;
    s.version = "builtin-v1";
    s.planner_synthesis_plain = kPlannerSynthesisPlain;
    s.planner_synthesis_entity = kPlannerSynthesisEntity;
    s.executor_synthesis = kExecutorSynthesis;
    s.subanswer_synthesis = kSubanswerSynthesis;
    s.planner_train_plain = kPlannerTrainPlain;
    s.planner_train_entity = kPlannerTrainEntity;
    s.executor_train = kExecutorTrain;
    return s;
  }();
  return set;
}

PromptSet load_dir(const std::string& dir) {
  PromptSet s;
  s.version = util::read_file(dir + "/version.txt");
  for (const Field& f : kFields) s.*(f.member) = util::read_file(dir + "/" + f.file);
  return s;
}

void write_dir(const PromptSet& set, const std::string& dir) {
  util::write_file(dir + "/version.txt", set.version);
  for (const Field& f : kFields) util::write_file(dir + "/" + f.file, set.*(f.member));
}

}  // namespace evipath::prompts

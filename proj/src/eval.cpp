#include "rlvr/eval.hpp"

#include <fstream>

#include "rlvr/errors.hpp"
#include "rlvr/jsonl.hpp"
#include "rlvr/judge.hpp"
#include "rlvr/parser.hpp"

namespace rlvr::eval {

std::vector<std::string> EvalMatrix::validate() const {
  std::vector<std::string> violations;
  if (rows.empty()) {
    violations.push_back("rows: empty");
    return violations;
  }
  const std::size_t n = rows.front().size();
  if (n == 0) violations.push_back("rows[0]: no samples");
  for (std::size_t q = 0; q < rows.size(); ++q) {
    const std::string path = "rows[" + std::to_string(q) + "]";
    if (rows[q].size() != n) violations.push_back(path + ": ragged row length");
    for (std::size_t s = 0; s < rows[q].size(); ++s)
      if (rows[q][s] != 0 && rows[q][s] != 1)
        violations.push_back(path + "[" + std::to_string(s) + "]: not a bit");
  }
  return violations;
}

namespace {

void require_well_formed(const EvalMatrix& matrix) {
  if (matrix.rows.empty() || matrix.rows.front().empty())
    throw EmptyMatrixError("eval matrix '" + matrix.benchmark + "' is empty");
  const auto violations = matrix.validate();
  if (!violations.empty())
    throw EmptyMatrixError("eval matrix '" + matrix.benchmark + "': " + violations.front());
}

}  // namespace

double pass_at_1(const EvalMatrix& matrix) {
  require_well_formed(matrix);
  long ones = 0;
  for (const auto& row : matrix.rows)
    for (const int bit : row) ones += bit;
  const double cells =
      static_cast<double>(matrix.rows.size()) * static_cast<double>(matrix.rows.front().size());
  return static_cast<double>(ones) / cells;
}

double consistency_at_k(const EvalMatrix& matrix, int k) {
  require_well_formed(matrix);
  const int n = matrix.samples_per_question();
  if (k < 1 || k > n)
    throw BadThresholdError("threshold " + std::to_string(k) + " outside [1, " +
                            std::to_string(n) + "]");
  long hits = 0;
  for (const auto& row : matrix.rows) {
    int ones = 0;
    for (const int bit : row) ones += bit;
    if (ones >= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(matrix.rows.size());
}

ContingencyTable audit_contingency(const std::vector<AuditRecord>& records) {
  if (records.empty()) throw EmptyInputError("no audit records");
  ContingencyTable table;
  for (const auto& record : records) {
    if (record.answer_correct == 1) {
      if (record.solution_correct == 1)
        ++table.counts.ans_correct_sol_correct;
      else
        ++table.counts.ans_correct_sol_wrong;
    } else {
      if (record.solution_correct == 1)
        ++table.counts.ans_wrong_sol_correct;
      else
        ++table.counts.ans_wrong_sol_wrong;
    }
  }
  table.total = static_cast<long>(records.size());

  const long correct_total = table.counts.ans_correct_sol_correct + table.counts.ans_correct_sol_wrong;
  if (correct_total > 0) {
    const double denom = static_cast<double>(correct_total);
    table.given_answer_correct = ContingencyRow{
        100.0 * static_cast<double>(table.counts.ans_correct_sol_correct) / denom,
        100.0 * static_cast<double>(table.counts.ans_correct_sol_wrong) / denom};
  }
  const long wrong_total = table.counts.ans_wrong_sol_correct + table.counts.ans_wrong_sol_wrong;
  if (wrong_total > 0) {
    const double denom = static_cast<double>(wrong_total);
    table.given_answer_incorrect = ContingencyRow{
        100.0 * static_cast<double>(table.counts.ans_wrong_sol_correct) / denom,
        100.0 * static_cast<double>(table.counts.ans_wrong_sol_wrong) / denom};
  }
  return table;
}

BenchmarkSummary aggregate_benchmarks(const std::vector<EvalMatrix>& matrices) {
  if (matrices.empty()) throw EmptyInputError("no benchmarks to aggregate");
  BenchmarkSummary summary;
  double sum = 0.0;
  for (const auto& matrix : matrices) {
    const double p = pass_at_1(matrix);
    summary.pass_at_1_by_benchmark.emplace_back(matrix.benchmark, p);
    sum += p;
  }
  summary.average = sum / static_cast<double>(matrices.size());
  return summary;
}

SftExportStats export_sft_records(const std::vector<std::pair<Task, StructuredOutput>>& rollouts,
                                  const std::filesystem::path& target) {
  std::ofstream out(target, std::ios::trunc);
  if (!out) throw IoError("cannot open " + target.string() + " for writing");

  SftExportStats stats;
  for (const auto& [task, output] : rollouts) {
    std::string assistant;
    try {
      assistant = render_structured(output, TagSchema::SeeThinkAnswer);
    } catch (const IllegalContentError&) {
      ++stats.skipped;
      continue;
    }
    if (format_reward(assistant, TagSchema::SeeThinkAnswer) != 1) {
      ++stats.skipped;
      continue;
    }
    const auto prompt = judge::render_generation_prompt(task.question, task.ground_truth);
    std::string user_text;
    for (const auto& message : prompt)
      if (message.role == judge::ChatMessage::Role::User) user_text += message.text();

    const json record{{"messages",
                       {{{"role", "user"}, {"content", user_text}},
                        {{"role", "assistant"}, {"content", assistant}}}}};
    out << record.dump() << '\n';
    ++stats.written;
  }
  if (!out) throw IoError("write failed for " + target.string());
  return stats;
}

}  // namespace rlvr::eval

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rlvr/types.hpp"

// Correctness metrics over per-question sample matrices, the rollout audit
// contingency table, benchmark aggregation, and chat-format SFT export.

namespace rlvr::eval {

// Per-question correctness bits: rows[q][s] is 1 iff sample s of question q
// was correct. All rows carry the same number of samples n.
struct EvalMatrix {
  std::string benchmark;
  std::vector<std::vector<int>> rows;

  int samples_per_question() const {
    return rows.empty() ? 0 : static_cast<int>(rows.front().size());
  }
  std::vector<std::string> validate() const;
};

// Mean single-sample accuracy: total ones / (questions * n).
// Throws EmptyMatrixError.
double pass_at_1(const EvalMatrix& matrix);

// Fraction of questions with at least k correct samples.
// Throws BadThresholdError unless 1 <= k <= n, EmptyMatrixError when empty.
double consistency_at_k(const EvalMatrix& matrix, int k);

// One audited rollout: was the final answer correct, and was the solution
// (the think trace, as judged) actually sound?
struct AuditRecord {
  std::string task_id;
  int answer_correct = 0;
  int solution_correct = 0;
};

struct ContingencyRow {
  double solution_correct_pct = 0.0;
  double solution_wrong_pct = 0.0;  // the false-positive rate when conditioned on a correct answer
};

struct ContingencyCounts {
  long ans_correct_sol_correct = 0;
  long ans_correct_sol_wrong = 0;
  long ans_wrong_sol_correct = 0;
  long ans_wrong_sol_wrong = 0;
};

// Row-conditional percentages (each present row sums to 100). A row whose
// condition set is empty is reported absent, not zero.
struct ContingencyTable {
  std::optional<ContingencyRow> given_answer_correct;
  std::optional<ContingencyRow> given_answer_incorrect;
  ContingencyCounts counts;
  long total = 0;
};

// Throws EmptyInputError.
ContingencyTable audit_contingency(const std::vector<AuditRecord>& records);

struct BenchmarkSummary {
  std::vector<std::pair<std::string, double>> pass_at_1_by_benchmark;
  double average = 0.0;  // unweighted mean across benchmarks
};

// Throws EmptyInputError.
BenchmarkSummary aggregate_benchmarks(const std::vector<EvalMatrix>& matrices);

struct SftExportStats {
  std::size_t written = 0;
  std::size_t skipped = 0;  // outputs that fail the format check
};

// Writes chat-format JSONL: the user message is the rendered generation
// prompt, the assistant message the structured rendering of the output.
// Malformed outputs are skipped and counted. Throws IoError.
SftExportStats export_sft_records(const std::vector<std::pair<Task, StructuredOutput>>& rollouts,
                                  const std::filesystem::path& target);

}  // namespace rlvr::eval

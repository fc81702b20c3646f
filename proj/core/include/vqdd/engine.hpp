#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vqdd/errors.hpp"
#include "vqdd/query_json.hpp"
#include "vqdd/simplify.hpp"
#include "vqdd/verifier.hpp"

namespace vqdd {

/// Thrown when the initial query does not exhibit any discrepancy; the
/// message names the verdicts on both sides.
class NoDiscrepancyError : public Error {
public:
    using Error::Error;
};

struct EngineConfig {
    /// Wall-clock budget for the whole reduction loop, in seconds. A candidate
    /// evaluation in flight completes before the budget is checked.
    double global_budget = std::numeric_limits<double>::infinity();
    enum class Mode { Dual, Single };
    Mode mode = Mode::Dual;
    /// Slack used when classifying witnesses (0 = exact).
    double witness_tol = 0.0;
    StrategyConfig strategy;
    /// When set, accepted candidates are persisted under step_%04d/ and every
    /// attempt is appended to trace.jsonl.
    std::filesystem::path checkpoint_dir;
    /// Optional observer called after every attempt (for live output).
    std::function<void(const struct AttemptRecord&)> on_attempt;
};

struct AttemptRecord {
    int attempt = 0;
    SimplificationStep step{};
    bool applicable = false;
    std::string faulty_verdict;  // empty when the step was inapplicable
    std::vector<std::string> oracle_verdicts;
    bool success = false;
    int size_before = 0;
    int size_after = 0;
    double wall_time = 0.0;
};

std::string attempt_record_json(const AttemptRecord& record);

struct ReductionTrace {
    std::vector<AttemptRecord> records;
};

/// Whether a simplification attempt kept the bug signal alive:
/// (a) the faulty verifier answers SAT with a witness outside the input
///     region, or (b) with a witness whose output misses the output region,
/// or (c) faulty and oracles all decide SAT/UNSAT, the oracles agree among
/// themselves, and the faulty verdict differs. ERROR and TIMEOUT verdicts
/// give no basis for comparison. Total: never throws.
bool success_simplification(const VerdictOutcome& faulty_outcome,
                            const std::vector<VerdictOutcome>& oracle_outcomes,
                            const VerificationQuery& query, double tol);

struct SimplifyOutcome {
    bool progress = false;
    VerificationQuery query;
    Eigen::VectorXd witness;
};

/// One round of Simplify: walks the strategy's attempt list and returns the
/// first candidate that still exhibits the discrepancy, with a refreshed
/// witness. progress=false when the list is exhausted (or the deadline hit).
SimplifyOutcome simplify_once(
    const EngineConfig& config, Verifier& faulty, const std::vector<Verifier*>& oracles,
    const VerificationQuery& query, const Eigen::VectorXd& witness,
    ReductionTrace* trace = nullptr,
    std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt);

struct ReduceResult {
    VerificationQuery query;
    ReductionTrace trace;
    int initial_size = 0;
    int final_size = 0;
    int accepted_steps = 0;
    bool budget_exhausted = false;
};

/// The full reduction loop: verifies the initial discrepancy, repeatedly
/// applies simplify_once while progress is made and budget remains, keeps
/// the smallest successful query, re-verifies it, and returns it with the
/// attempt trace.
ReduceResult reduce(const EngineConfig& config, Verifier& faulty,
                    const std::vector<Verifier*>& oracles, const VerificationQuery& initial);

}  // namespace vqdd

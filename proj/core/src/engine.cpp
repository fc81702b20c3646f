#include "vqdd/engine.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "vqdd/numeric_text.hpp"
#include "vqdd/onnx.hpp"
#include "vqdd/vnnlib.hpp"

namespace vqdd {

namespace {

using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

bool deadline_passed(const std::optional<Clock::time_point>& deadline) {
    return deadline && Clock::now() >= *deadline;
}

std::string step_json(const SimplificationStep& step) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, MergeFcLayersStep>) {
                return "{\"kind\": \"merge_fc_layers\", \"layer\": " + std::to_string(s.layer) +
                       "}";
            } else if constexpr (std::is_same_v<T, LowerAndMergeConvStep>) {
                return "{\"kind\": \"lower_and_merge_conv\", \"layer\": " +
                       std::to_string(s.layer) + "}";
            } else {
                return "{\"kind\": \"merge_neurons\", \"layer\": " + std::to_string(s.layer) +
                       ", \"first\": " + std::to_string(s.first) +
                       ", \"second\": " + std::to_string(s.second) + "}";
            }
        },
        step);
}

VerdictOutcome run_guarded(Verifier& verifier, const VerificationQuery& query) {
    try {
        return verifier.run(query);
    } catch (const std::exception& e) {
        VerdictOutcome outcome;
        outcome.verdict = Verdict::Error;
        outcome.raw_output = std::string("verifier infrastructure failure: ") + e.what();
        return outcome;
    }
}

std::optional<Eigen::VectorXd> select_witness(const VerdictOutcome& faulty_outcome,
                                              const std::vector<VerdictOutcome>& oracle_outcomes,
                                              const VerificationQuery& query, double tol) {
    // Valid witnesses beat invalid ones; among equals the oracle wins.
    int best_rank = -1;
    std::optional<Eigen::VectorXd> best;
    const auto consider = [&](const VerdictOutcome& outcome, bool is_oracle) {
        if (outcome.verdict != Verdict::Sat || !outcome.witness) return;
        if (outcome.witness->size() != query.network().input_dim()) return;
        const bool valid =
            validate_witness(query, *outcome.witness, tol) == WitnessStatus::Valid;
        const int rank = (valid ? 2 : 0) + (is_oracle ? 1 : 0);
        if (rank > best_rank) {
            best_rank = rank;
            best = *outcome.witness;
        }
    };
    for (const VerdictOutcome& outcome : oracle_outcomes) consider(outcome, true);
    consider(faulty_outcome, false);
    return best;
}

void append_trace_line(const EngineConfig& config, const AttemptRecord& record) {
    if (!config.checkpoint_dir.empty()) {
        std::ofstream out(config.checkpoint_dir / "trace.jsonl", std::ios::app);
        out << attempt_record_json(record) << "\n";
    }
    if (config.on_attempt) config.on_attempt(record);
}

void write_checkpoint(const EngineConfig& config, int ordinal, const VerificationQuery& query,
                      const std::string& accepted_step) {
    if (config.checkpoint_dir.empty()) return;
    char name[16];
    std::snprintf(name, sizeof(name), "step_%04d", ordinal);
    const fs::path dir = config.checkpoint_dir / name;
    fs::create_directories(dir);
    save_onnx(query.network(), dir / "network.onnx");
    std::ofstream prop(dir / "property.vnnlib");
    prop << emit_vnnlib(query.property());
    QueryDocument doc{query,
                      {{"accepted_step", accepted_step},
                       {"checkpoint", name},
                       {"network_size", std::to_string(query.network().size())}}};
    write_query(doc, dir / "query.json");
}

std::string describe_outcome(const VerdictOutcome& outcome) {
    std::string text = verdict_name(outcome.verdict);
    if (outcome.verdict == Verdict::Sat && outcome.witness) text += " (with witness)";
    return text;
}

}  // namespace

std::string attempt_record_json(const AttemptRecord& record) {
    std::string out = "{\"attempt\": " + std::to_string(record.attempt) +
                      ", \"step\": " + step_json(record.step) +
                      ", \"applicable\": " + (record.applicable ? "true" : "false");
    out += ", \"faulty\": ";
    if (record.faulty_verdict.empty())
        out += "null";
    else
        out += "\"" + record.faulty_verdict + "\"";
    out += ", \"oracles\": [";
    for (std::size_t i = 0; i < record.oracle_verdicts.size(); ++i) {
        if (i) out += ", ";
        out += "\"" + record.oracle_verdicts[i] + "\"";
    }
    out += "], \"success\": ";
    out += record.success ? "true" : "false";
    out += ", \"size_before\": " + std::to_string(record.size_before) +
           ", \"size_after\": " + std::to_string(record.size_after) +
           ", \"wall_time\": " + format_double(record.wall_time) + "}";
    return out;
}

bool success_simplification(const VerdictOutcome& faulty_outcome,
                            const std::vector<VerdictOutcome>& oracle_outcomes,
                            const VerificationQuery& query, double tol) {
    if (faulty_outcome.verdict == Verdict::Sat && faulty_outcome.witness) {
        const Eigen::VectorXd& witness = *faulty_outcome.witness;
        // A witness of the wrong arity is in particular not in the input region.
        if (witness.size() != query.network().input_dim()) return true;
        if (!query.property().contains_input(witness, tol)) return true;  // clause (a)
        if (!query.property().satisfies_output(query.network().evaluate(witness), tol))
            return true;  // clause (b)
    }

    if (oracle_outcomes.empty()) return false;  // single mode: clause (c) never applies

    const auto comparable = [](Verdict v) { return v == Verdict::Sat || v == Verdict::Unsat; };
    if (!comparable(faulty_outcome.verdict)) return false;
    const Verdict first_oracle = oracle_outcomes.front().verdict;
    for (const VerdictOutcome& oracle : oracle_outcomes) {
        if (!comparable(oracle.verdict)) return false;
        if (oracle.verdict != first_oracle) return false;  // oracles must agree
    }
    return faulty_outcome.verdict != first_oracle;  // clause (c)
}

SimplifyOutcome simplify_once(const EngineConfig& config, Verifier& faulty,
                              const std::vector<Verifier*>& oracles,
                              const VerificationQuery& query, const Eigen::VectorXd& witness,
                              ReductionTrace* trace,
                              std::optional<Clock::time_point> deadline) {
    const std::vector<SimplificationStep> attempts =
        strategy_attempts(query.network(), witness, config.strategy);

    int attempt_number = trace ? static_cast<int>(trace->records.size()) : 0;
    for (const SimplificationStep& step : attempts) {
        if (deadline_passed(deadline)) break;

        AttemptRecord record;
        record.attempt = ++attempt_number;
        record.step = step;
        record.size_before = query.network().size();
        record.size_after = record.size_before;

        const auto start = Clock::now();
        std::optional<VerificationQuery> candidate;
        try {
            candidate = query.with_network(apply_step(query.network(), step, witness));
            record.applicable = true;
        } catch (const InvalidStepError&) {
            record.applicable = false;
        }

        std::optional<VerdictOutcome> faulty_outcome;
        std::vector<VerdictOutcome> oracle_outcomes;
        if (candidate) {
            faulty_outcome = run_guarded(faulty, *candidate);
            record.faulty_verdict = verdict_name(faulty_outcome->verdict);
            oracle_outcomes.reserve(oracles.size());
            for (Verifier* oracle : oracles) {
                oracle_outcomes.push_back(run_guarded(*oracle, *candidate));
                record.oracle_verdicts.push_back(verdict_name(oracle_outcomes.back().verdict));
            }
            record.success = success_simplification(*faulty_outcome, oracle_outcomes, *candidate,
                                                    config.witness_tol);
            record.size_after = candidate->network().size();
        }
        record.wall_time = std::chrono::duration<double>(Clock::now() - start).count();

        if (trace) trace->records.push_back(record);
        append_trace_line(config, record);

        if (record.success) {
            const auto refreshed =
                select_witness(*faulty_outcome, oracle_outcomes, *candidate, config.witness_tol);
            return {true, *candidate, refreshed ? *refreshed : witness};
        }
    }
    return {false, query, witness};
}

ReduceResult reduce(const EngineConfig& config, Verifier& faulty,
                    const std::vector<Verifier*>& oracles, const VerificationQuery& initial) {
    if (config.mode == EngineConfig::Mode::Dual && oracles.empty())
        throw InvalidInputError("dual mode requires at least one oracle verifier");
    if (config.mode == EngineConfig::Mode::Single && !oracles.empty())
        throw InvalidInputError("single mode takes no oracle verifiers");

    const int initial_size = initial.network().size();
    if (config.global_budget <= 0.0)
        return ReduceResult{initial, {}, initial_size, initial_size, 0, true};

    std::optional<Clock::time_point> deadline;
    if (std::isfinite(config.global_budget))
        deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                      std::chrono::duration<double>(config.global_budget));
    if (!config.checkpoint_dir.empty()) fs::create_directories(config.checkpoint_dir);

    // The discrepancy must be present before any reduction is attempted.
    const VerdictOutcome faulty_initial = run_guarded(faulty, initial);
    std::vector<VerdictOutcome> oracle_initial;
    oracle_initial.reserve(oracles.size());
    for (Verifier* oracle : oracles) oracle_initial.push_back(run_guarded(*oracle, initial));
    if (!success_simplification(faulty_initial, oracle_initial, initial, config.witness_tol)) {
        std::string message = "initial query shows no discrepancy: faulty verifier answered " +
                              describe_outcome(faulty_initial);
        for (std::size_t i = 0; i < oracle_initial.size(); ++i)
            message += ", oracle " + std::to_string(i + 1) + " answered " +
                       describe_outcome(oracle_initial[i]);
        throw NoDiscrepancyError(message);
    }

    std::optional<Eigen::VectorXd> witness =
        select_witness(faulty_initial, oracle_initial, initial, config.witness_tol);
    if (!witness)
        throw Error("no witness available from any SAT verdict on the initial query");

    ReduceResult result{initial, {}, initial_size, initial_size, 0, false};
    bool progress = true;
    while (progress) {
        if (deadline_passed(deadline)) break;
        SimplifyOutcome outcome = simplify_once(config, faulty, oracles, result.query, *witness,
                                                &result.trace, deadline);
        progress = outcome.progress;
        if (progress) {
            result.query = std::move(outcome.query);
            witness = std::move(outcome.witness);
            ++result.accepted_steps;
            write_checkpoint(config, result.accepted_steps, result.query,
                             describe_step(result.trace.records.back().step));
        }
    }
    // Covers both the loop-head expiry and a deadline hit mid-round.
    result.budget_exhausted = deadline_passed(deadline);

    if (result.accepted_steps > 0) {
        // Fresh invocations: the returned query must still exhibit the bug.
        const VerdictOutcome faulty_final = run_guarded(faulty, result.query);
        std::vector<VerdictOutcome> oracle_final;
        for (Verifier* oracle : oracles) oracle_final.push_back(run_guarded(*oracle, result.query));
        if (!success_simplification(faulty_final, oracle_final, result.query, config.witness_tol))
            throw Error("final query no longer exhibits the discrepancy on re-verification");
    }

    result.final_size = result.query.network().size();
    return result;
}

}  // namespace vqdd

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/fixtures.hpp"
#include "support/truth_table.hpp"
#include "vqdd/engine.hpp"
#include "vqdd/onnx.hpp"
#include "vqdd/reference_verifiers.hpp"

using namespace vqdd;
using namespace vqdd::test;

namespace {

CallbackVerifier make_bnb_oracle() {
    return CallbackVerifier("bnb", [](const VerificationQuery& q) { return bnb_verify(q); });
}

CallbackVerifier make_faulty(FaultSpec spec) {
    return CallbackVerifier("faulty", [spec](const VerificationQuery& q) {
        return faulty_verify(spec, q);
    });
}

EngineConfig quiet_config(EngineConfig::Mode mode = EngineConfig::Mode::Dual) {
    EngineConfig config;
    config.mode = mode;
    return config;
}

}  // namespace

TEST_CASE("success test covers every verdict combination") {
    const VerificationQuery query = truth_table_query();

    SUBCASE("dual mode") {
        for (OutcomeClass faulty : all_outcome_classes()) {
            for (OutcomeClass oracle : all_outcome_classes()) {
                const bool actual = success_simplification(
                    make_outcome(faulty), {make_outcome(oracle)}, query, 0.0);
                const bool expected = expected_success(faulty, &oracle);
                INFO("faulty=" << outcome_class_name(faulty)
                               << " oracle=" << outcome_class_name(oracle));
                CHECK(actual == expected);
            }
        }
    }

    SUBCASE("single mode consults only the witness clauses") {
        for (OutcomeClass faulty : all_outcome_classes()) {
            const bool actual = success_simplification(make_outcome(faulty), {}, query, 0.0);
            const bool expected = expected_success(faulty, nullptr);
            INFO("faulty=" << outcome_class_name(faulty));
            CHECK(actual == expected);
        }
    }

    SUBCASE("multiple oracles must agree for clause (c)") {
        const VerdictOutcome faulty = make_outcome(OutcomeClass::Unsat);
        CHECK(success_simplification(
            faulty, {make_outcome(OutcomeClass::SatValid), make_outcome(OutcomeClass::SatValid)},
            query, 0.0));
        // Disagreeing oracles void the clause.
        CHECK_FALSE(success_simplification(
            faulty, {make_outcome(OutcomeClass::SatValid), make_outcome(OutcomeClass::Unsat)},
            query, 0.0));
        // An erroring oracle voids it too.
        CHECK_FALSE(success_simplification(
            faulty, {make_outcome(OutcomeClass::SatValid), make_outcome(OutcomeClass::Error)},
            query, 0.0));
    }

    SUBCASE("a SAT verdict with a wrong-arity witness counts as invalid") {
        VerdictOutcome weird;
        weird.verdict = Verdict::Sat;
        weird.witness = Eigen::VectorXd::Zero(3);
        CHECK(success_simplification(weird, {}, query, 0.0));
    }
}

TEST_CASE("simplify_once accepts the first successful attempt") {
    const VerificationQuery qe = make_qe();
    CallbackVerifier faulty = make_faulty({FaultMode::FlipToUnsat, 1, 0});
    CallbackVerifier oracle = make_bnb_oracle();
    std::vector<Verifier*> oracles{&oracle};

    Eigen::VectorXd witness(1);
    witness << 5.0;
    ReductionTrace trace;
    const SimplifyOutcome outcome =
        simplify_once(quiet_config(), faulty, oracles, qe, witness, &trace);

    CHECK(outcome.progress);
    CHECK(outcome.query.network().size() == 5);  // merge-fc-layers t=2: 8 -> 5
    REQUIRE_FALSE(trace.records.empty());
    CHECK(trace.records.size() == 1);
    CHECK(trace.records[0].success);
    CHECK(describe_step(trace.records[0].step) == "merge-fc-layers t=2");
    CHECK(trace.records[0].size_before == 8);
    CHECK(trace.records[0].size_after == 5);
    // The refreshed witness satisfies the new query.
    CHECK(validate_witness(outcome.query, outcome.witness, 0.0) == WitnessStatus::Valid);
}

TEST_CASE("simplify_once saturates on a network with no hidden layers") {
    FullyConnectedLayer out;
    out.weights = Eigen::MatrixXd::Identity(1, 1);
    out.biases = Eigen::VectorXd::Zero(1);
    const VerificationQuery query(Network(1, {out}), make_pe());
    CallbackVerifier faulty = make_faulty({FaultMode::FlipToUnsat, 1, 0});
    CallbackVerifier oracle = make_bnb_oracle();
    std::vector<Verifier*> oracles{&oracle};

    Eigen::VectorXd witness(1);
    witness << 5.0;
    const SimplifyOutcome outcome =
        simplify_once(quiet_config(), faulty, oracles, query, witness);
    CHECK_FALSE(outcome.progress);
    CHECK(outcome.query.network().size() == query.network().size());
}

TEST_CASE("steps that break the discrepancy are skipped in favor of later ones") {
    // Layer merges shrink the 8-neuron example below the lie threshold, so
    // only a single neuron merge (8 -> 7) keeps the bug alive.
    const VerificationQuery qe = make_qe();
    CallbackVerifier faulty = make_faulty({FaultMode::LieAboveSize, 7, 0});
    CallbackVerifier oracle = make_bnb_oracle();
    std::vector<Verifier*> oracles{&oracle};

    Eigen::VectorXd witness(1);
    witness << 5.0;
    ReductionTrace trace;
    const SimplifyOutcome outcome =
        simplify_once(quiet_config(), faulty, oracles, qe, witness, &trace);

    CHECK(outcome.progress);
    CHECK(outcome.query.network().size() == 7);
    CHECK(trace.records.size() > 1);  // the fc merges were tried and failed
    CHECK(std::holds_alternative<MergeNeuronsStep>(trace.records.back().step));
    for (std::size_t i = 0; i + 1 < trace.records.size(); ++i)
        CHECK_FALSE(trace.records[i].success);
}

TEST_CASE("reduce shrinks the running example to input plus output") {
    const VerificationQuery qe = make_qe();
    CallbackVerifier faulty = make_faulty({FaultMode::FlipToUnsat, 1, 0});
    CallbackVerifier oracle = make_bnb_oracle();
    std::vector<Verifier*> oracles{&oracle};

    const ReduceResult result = reduce(quiet_config(), faulty, oracles, qe);
    CHECK(result.initial_size == 8);
    CHECK(result.final_size == 2);
    CHECK(result.accepted_steps == 2);
    CHECK_FALSE(result.budget_exhausted);

    // Sizes decrease monotonically across successful records.
    int last_size = result.initial_size;
    for (const AttemptRecord& record : result.trace.records) {
        if (record.success) {
            CHECK(record.size_after < last_size);
            last_size = record.size_after;
        }
    }
}

TEST_CASE("reduce is deterministic") {
    const VerificationQuery qe = make_qe();
    CallbackVerifier faulty = make_faulty({FaultMode::FlipToUnsat, 1, 0});
    CallbackVerifier oracle = make_bnb_oracle();
    std::vector<Verifier*> oracles{&oracle};

    const ReduceResult a = reduce(quiet_config(), faulty, oracles, qe);
    const ReduceResult b = reduce(quiet_config(), faulty, oracles, qe);
    CHECK(export_onnx(a.query.network()) == export_onnx(b.query.network()));
    REQUIRE(a.trace.records.size() == b.trace.records.size());
    for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
        CHECK(describe_step(a.trace.records[i].step) == describe_step(b.trace.records[i].step));
        CHECK(a.trace.records[i].success == b.trace.records[i].success);
    }
}

TEST_CASE("zero budget returns the query unchanged with an empty trace") {
    const VerificationQuery qe = make_qe();
    CallbackVerifier faulty = make_faulty({FaultMode::FlipToUnsat, 1, 0});
    CallbackVerifier oracle = make_bnb_oracle();
    std::vector<Verifier*> oracles{&oracle};

    EngineConfig config = quiet_config();
    config.global_budget = 0.0;
    const ReduceResult result = reduce(config, faulty, oracles, qe);
    CHECK(result.final_size == result.initial_size);
    CHECK(result.trace.records.empty());
    CHECK(result.accepted_steps == 0);
    CHECK(result.budget_exhausted);
}

TEST_CASE("an initial query without discrepancy is a precondition error") {
    const VerificationQuery qe = make_qe();
    CallbackVerifier truthful("truthful",
                              [](const VerificationQuery& q) { return bnb_verify(q); });
    CallbackVerifier oracle = make_bnb_oracle();
    std::vector<Verifier*> oracles{&oracle};

    try {
        reduce(quiet_config(), truthful, oracles, qe);
        FAIL_CHECK("expected NoDiscrepancyError");
    } catch (const NoDiscrepancyError& e) {
        const std::string message = e.what();
        CHECK(message.find("SAT") != std::string::npos);  // names both verdicts
    }
}

TEST_CASE("single-verifier mode reduces on invalid witnesses alone") {
    const VerificationQuery qe = make_qe();
    CallbackVerifier faulty = make_faulty({FaultMode::CorruptWitness, 1, 3});

    const ReduceResult result =
        reduce(quiet_config(EngineConfig::Mode::Single), faulty, {}, qe);
    CHECK(result.final_size < result.initial_size);
    CHECK(result.final_size == 2);
}

TEST_CASE("engine configuration is validated") {
    const VerificationQuery qe = make_qe();
    CallbackVerifier faulty = make_faulty({FaultMode::FlipToUnsat, 1, 0});
    CallbackVerifier oracle = make_bnb_oracle();
    std::vector<Verifier*> oracles{&oracle};

    CHECK_THROWS_AS(reduce(quiet_config(EngineConfig::Mode::Dual), faulty, {}, qe),
                    InvalidInputError);
    CHECK_THROWS_AS(reduce(quiet_config(EngineConfig::Mode::Single), faulty, oracles, qe),
                    InvalidInputError);
}

TEST_CASE("checkpoints and the trace log are written") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "vqdd-test-checkpoints";
    fs::remove_all(dir);

    const VerificationQuery qe = make_qe();
    CallbackVerifier faulty = make_faulty({FaultMode::FlipToUnsat, 1, 0});
    CallbackVerifier oracle = make_bnb_oracle();
    std::vector<Verifier*> oracles{&oracle};

    EngineConfig config = quiet_config();
    config.checkpoint_dir = dir;
    int observed = 0;
    config.on_attempt = [&observed](const AttemptRecord&) { ++observed; };

    const ReduceResult result = reduce(config, faulty, oracles, qe);
    CHECK(observed == static_cast<int>(result.trace.records.size()));
    CHECK(fs::exists(dir / "trace.jsonl"));
    CHECK(fs::exists(dir / "step_0001" / "network.onnx"));
    CHECK(fs::exists(dir / "step_0001" / "property.vnnlib"));
    CHECK(fs::exists(dir / "step_0001" / "query.json"));
    CHECK(fs::exists(dir / "step_0002" / "network.onnx"));

    // The first checkpoint reloads to the 5-neuron intermediate network.
    const Network step1 = load_onnx(dir / "step_0001" / "network.onnx");
    CHECK(step1.size() == 5);

    const QueryDocument doc = read_query(dir / "step_0001" / "query.json");
    CHECK(doc.metadata.at("accepted_step") == "merge-fc-layers t=2");
    fs::remove_all(dir);
}

TEST_CASE("attempt records serialize to stable JSON") {
    AttemptRecord record;
    record.attempt = 3;
    record.step = MergeNeuronsStep{2, 0, 1};
    record.applicable = true;
    record.faulty_verdict = "UNSAT";
    record.oracle_verdicts = {"SAT"};
    record.success = true;
    record.size_before = 8;
    record.size_after = 7;
    record.wall_time = 0.5;
    CHECK(attempt_record_json(record) ==
          "{\"attempt\": 3, \"step\": {\"kind\": \"merge_neurons\", \"layer\": 2, "
          "\"first\": 0, \"second\": 1}, \"applicable\": true, \"faulty\": \"UNSAT\", "
          "\"oracles\": [\"SAT\"], \"success\": true, \"size_before\": 8, "
          "\"size_after\": 7, \"wall_time\": 0.5}");
}

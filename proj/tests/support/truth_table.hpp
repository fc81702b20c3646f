#pragma once

// Exhaustive verdict-combination table for the success test. The witness
// classes are realized against a 1-input identity query: box [0, 10], output
// region [0, 5].

#include <string>
#include <vector>

#include "vqdd/engine.hpp"

namespace vqdd::test {

enum class OutcomeClass {
    SatValid,
    SatInvalidInput,
    SatInvalidOutput,
    Unsat,
    Error,
    Timeout,
};

inline const std::vector<OutcomeClass>& all_outcome_classes() {
    static const std::vector<OutcomeClass> classes{
        OutcomeClass::SatValid,        OutcomeClass::SatInvalidInput,
        OutcomeClass::SatInvalidOutput, OutcomeClass::Unsat,
        OutcomeClass::Error,           OutcomeClass::Timeout,
    };
    return classes;
}

inline std::string outcome_class_name(OutcomeClass c) {
    switch (c) {
        case OutcomeClass::SatValid: return "SAT-valid";
        case OutcomeClass::SatInvalidInput: return "SAT-invalid-input";
        case OutcomeClass::SatInvalidOutput: return "SAT-invalid-output";
        case OutcomeClass::Unsat: return "UNSAT";
        case OutcomeClass::Error: return "ERROR";
        case OutcomeClass::Timeout: return "TIMEOUT";
    }
    return "?";
}

/// Identity network on [0, 10] with output region [0, 5]: witness 3 is valid,
/// 11 is outside the box, 7 violates the output region.
inline VerificationQuery truth_table_query() {
    FullyConnectedLayer identity;
    identity.weights = Eigen::MatrixXd::Identity(1, 1);
    identity.biases = Eigen::VectorXd::Zero(1);
    LinearInequality lo{Eigen::VectorXd::Ones(1), Relation::GreaterEq, 0.0};
    LinearInequality hi{Eigen::VectorXd::Ones(1), Relation::LessEq, 5.0};
    return VerificationQuery(Network(1, {identity}), Property({{0.0, 10.0}}, 1, {{lo, hi}}));
}

inline VerdictOutcome make_outcome(OutcomeClass c) {
    VerdictOutcome outcome;
    const auto witness = [](double x) {
        Eigen::VectorXd v(1);
        v << x;
        return v;
    };
    switch (c) {
        case OutcomeClass::SatValid:
            outcome.verdict = Verdict::Sat;
            outcome.witness = witness(3.0);
            break;
        case OutcomeClass::SatInvalidInput:
            outcome.verdict = Verdict::Sat;
            outcome.witness = witness(11.0);
            break;
        case OutcomeClass::SatInvalidOutput:
            outcome.verdict = Verdict::Sat;
            outcome.witness = witness(7.0);
            break;
        case OutcomeClass::Unsat:
            outcome.verdict = Verdict::Unsat;
            break;
        case OutcomeClass::Error:
            outcome.verdict = Verdict::Error;
            break;
        case OutcomeClass::Timeout:
            outcome.verdict = Verdict::Timeout;
            break;
    }
    return outcome;
}

inline bool verdict_of(OutcomeClass c, Verdict& out) {
    switch (c) {
        case OutcomeClass::SatValid:
        case OutcomeClass::SatInvalidInput:
        case OutcomeClass::SatInvalidOutput:
            out = Verdict::Sat;
            return true;
        case OutcomeClass::Unsat:
            out = Verdict::Unsat;
            return true;
        default:
            return false;
    }
}

/// The specified boolean: clause (a) invalid-input witness, clause (b)
/// invalid-output witness, clause (c) comparable disagreeing verdicts (dual
/// mode only).
inline bool expected_success(OutcomeClass faulty, const OutcomeClass* oracle) {
    if (faulty == OutcomeClass::SatInvalidInput) return true;
    if (faulty == OutcomeClass::SatInvalidOutput) return true;
    if (!oracle) return false;
    Verdict faulty_verdict, oracle_verdict;
    if (!verdict_of(faulty, faulty_verdict) || !verdict_of(*oracle, oracle_verdict))
        return false;
    return faulty_verdict != oracle_verdict;
}

}  // namespace vqdd::test

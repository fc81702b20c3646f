#pragma once

#include <cstdint>

#include "vqdd/verifier.hpp"

namespace vqdd {

struct BnbOptions {
    double box_resolution = 1e-3;
    std::int64_t max_splits = std::int64_t(1) << 20;
};

/// Sound branch-and-bound verifier over the input box, pruning with interval
/// bound propagation. SAT answers always carry a witness that
/// validate_witness classifies Valid; UNSAT answers are sound. Queries whose
/// satisfiability flips within box_resolution of the region boundary may
/// come back as ERROR("unknown"), and exhausting max_splits is an ERROR too,
/// never a wrong verdict.
VerdictOutcome bnb_verify(const VerificationQuery& query, const BnbOptions& options = {});

enum class FaultMode { FlipToSat, FlipToUnsat, CorruptWitness, LieAboveSize };

struct FaultSpec {
    FaultMode mode = FaultMode::FlipToUnsat;
    int threshold = 1;       // LieAboveSize: lie while network size >= threshold
    std::uint64_t seed = 0;  // picks the coordinate perturbed by CorruptWitness

    void validate() const;
};

/// Deterministic fault injection on top of bnb_verify ground truth:
/// FlipToSat answers SAT with the box midpoint when the truth is UNSAT,
/// FlipToUnsat answers UNSAT when the truth is SAT, CorruptWitness moves a
/// true witness outside the input box by one box width, and LieAboveSize
/// applies FlipToUnsat only while the network has at least `threshold`
/// neurons.
VerdictOutcome faulty_verify(const FaultSpec& spec, const VerificationQuery& query,
                             const BnbOptions& options = {});

}  // namespace vqdd

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vqdd/query.hpp"

namespace vqdd {

enum class Verdict { Sat, Unsat, Error, Timeout };

std::string verdict_name(Verdict verdict);  // "SAT", "UNSAT", "ERROR", "TIMEOUT"

/// The result of one verifier invocation. `witness` is present exactly when
/// the verdict is SAT.
struct VerdictOutcome {
    Verdict verdict = Verdict::Error;
    std::optional<Eigen::VectorXd> witness;
    double wall_time = 0.0;
    std::string raw_output;
};

/// How to drive one external verifier executable. The command template must
/// contain the {network}, {property} and {result} placeholders; {timeout_s}
/// is optional.
struct VerifierConfig {
    std::string name;
    std::string command_template;
    double invocation_timeout = 60.0;
    std::filesystem::path workdir;  // empty: run inside the scratch directory

    void validate() const;
};

/// Writes the query next to a fresh scratch directory, runs the command and
/// parses the result file. Never throws on verifier misbehavior: timeouts,
/// crashes and garbage output all map to TIMEOUT/ERROR outcomes. The scratch
/// root honors the DELBUG_SCRATCH environment variable.
VerdictOutcome invoke(const VerifierConfig& config, const VerificationQuery& query);

/// Parses the result-file grammar: first token one of sat/unsat/timeout/error;
/// a sat result is followed by `(X_i value)` pairs, optionally wrapped in one
/// outer list; `(Y_i value)` pairs are ignored. Malformed content yields an
/// ERROR outcome with the text retained.
VerdictOutcome parse_result_text(const std::string& text, int input_dim);

enum class WitnessStatus { Valid, OutsideInputRegion, OutputViolation };

std::string witness_status_name(WitnessStatus status);

/// Checks a witness against the query: input-region membership first, then
/// output-region membership of the network's output.
WitnessStatus validate_witness(const VerificationQuery& query, const Eigen::VectorXd& witness,
                               double tol);

/// Uniform handle over external and in-process verifiers.
class Verifier {
public:
    virtual ~Verifier() = default;
    virtual std::string name() const = 0;
    virtual VerdictOutcome run(const VerificationQuery& query) = 0;
};

class ExternalVerifier final : public Verifier {
public:
    explicit ExternalVerifier(VerifierConfig config);
    std::string name() const override { return config_.name; }
    VerdictOutcome run(const VerificationQuery& query) override { return invoke(config_, query); }

private:
    VerifierConfig config_;
};

class CallbackVerifier final : public Verifier {
public:
    using Callback = std::function<VerdictOutcome(const VerificationQuery&)>;
    CallbackVerifier(std::string name, Callback callback)
        : name_(std::move(name)), callback_(std::move(callback)) {}
    std::string name() const override { return name_; }
    VerdictOutcome run(const VerificationQuery& query) override { return callback_(query); }

private:
    std::string name_;
    Callback callback_;
};

}  // namespace vqdd

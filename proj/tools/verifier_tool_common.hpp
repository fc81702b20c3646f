#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "vqdd/errors.hpp"
#include "vqdd/numeric_text.hpp"
#include "vqdd/onnx.hpp"
#include "vqdd/query.hpp"
#include "vqdd/verifier.hpp"
#include "vqdd/vnnlib.hpp"

namespace vqdd::tools {

inline VerificationQuery load_query_pair(const std::filesystem::path& network_file,
                                         const std::filesystem::path& property_file) {
    Network network = load_onnx(network_file);
    std::ifstream in(property_file);
    if (!in) throw InvalidInputError("cannot open '" + property_file.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return VerificationQuery(std::move(network), parse_vnnlib(buffer.str()));
}

/// Writes the adapter result grammar: the verdict token on the first line;
/// for SAT one assignment list with the X values of the witness and the Y
/// values of the network output at it.
inline void write_result_file(const std::filesystem::path& file, const VerdictOutcome& outcome,
                              const VerificationQuery* query) {
    std::ofstream out(file, std::ios::trunc);
    switch (outcome.verdict) {
        case Verdict::Sat: {
            out << "sat\n(";
            const Eigen::VectorXd& witness = *outcome.witness;
            for (int i = 0; i < witness.size(); ++i) {
                if (i) out << "\n ";
                out << "(X_" << i << " " << format_double(witness(i)) << ")";
            }
            if (query) {
                const Eigen::VectorXd output = query->network().evaluate(witness);
                for (int i = 0; i < output.size(); ++i)
                    out << "\n (Y_" << i << " " << format_double(output(i)) << ")";
            }
            out << ")\n";
            break;
        }
        case Verdict::Unsat:
            out << "unsat\n";
            break;
        case Verdict::Timeout:
            out << "timeout\n";
            break;
        case Verdict::Error:
            out << "error\n" << outcome.raw_output << "\n";
            break;
    }
}

inline void write_error_result(const std::filesystem::path& file, const std::string& reason) {
    std::ofstream out(file, std::ios::trunc);
    out << "error\n" << reason << "\n";
}

}  // namespace vqdd::tools

// Fault-injected verifier for end-to-end reduction tests:
//   faultyverify --mode flip-to-unsat --seed 7 <network> <property> <result>

#include <CLI11.hpp>
#include <iostream>
#include <map>

#include "verifier_tool_common.hpp"
#include "vqdd/reference_verifiers.hpp"

int main(int argc, char** argv) {
    CLI::App app{"fault-injected verifier wrapping the branch-and-bound reference"};
    std::string network_file, property_file, result_file, mode;
    vqdd::FaultSpec spec;
    vqdd::BnbOptions options;
    double timeout_s = 0.0;
    const std::map<std::string, vqdd::FaultMode> modes{
        {"flip-to-sat", vqdd::FaultMode::FlipToSat},
        {"flip-to-unsat", vqdd::FaultMode::FlipToUnsat},
        {"corrupt-witness", vqdd::FaultMode::CorruptWitness},
        {"lie-above-size", vqdd::FaultMode::LieAboveSize},
    };
    app.add_option("--mode", mode, "fault to inject")
        ->required()
        ->check(CLI::IsMember({"flip-to-sat", "flip-to-unsat", "corrupt-witness",
                               "lie-above-size"}));
    app.add_option("--seed", spec.seed, "seed for witness corruption");
    app.add_option("--threshold", spec.threshold,
                   "lie-above-size: lie while the network has at least this many neurons");
    app.add_option("--resolution", options.box_resolution, "minimum box width before giving up");
    app.add_option("--max-splits", options.max_splits, "split budget");
    app.add_option("--timeout", timeout_s,
                   "accepted for command-template compatibility; enforcement is external");
    app.add_option("network", network_file, "ONNX network file")->required();
    app.add_option("property", property_file, "VNN-LIB property file")->required();
    app.add_option("result", result_file, "result file to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    spec.mode = modes.at(mode);

    try {
        const vqdd::VerificationQuery query =
            vqdd::tools::load_query_pair(network_file, property_file);
        const vqdd::VerdictOutcome outcome = vqdd::faulty_verify(spec, query, options);
        vqdd::tools::write_result_file(result_file, outcome, &query);
    } catch (const std::exception& e) {
        std::cerr << "faultyverify: " << e.what() << "\n";
        vqdd::tools::write_error_result(result_file, e.what());
        return 1;
    }
    return 0;
}

// Sound branch-and-bound reference verifier speaking the subprocess protocol:
//   refverify <network.onnx> <property.vnnlib> <result-file>

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>

#include "verifier_tool_common.hpp"
#include "vqdd/reference_verifiers.hpp"

int main(int argc, char** argv) {
    CLI::App app{"sound branch-and-bound verifier for ONNX + VNN-LIB queries"};
    std::string network_file, property_file, result_file;
    vqdd::BnbOptions options;
    double timeout_s = 0.0;
    app.add_option("network", network_file, "ONNX network file")->required();
    app.add_option("property", property_file, "VNN-LIB property file")->required();
    app.add_option("result", result_file, "result file to write")->required();
    app.add_option("--resolution", options.box_resolution, "minimum box width before giving up");
    app.add_option("--max-splits", options.max_splits, "split budget");
    app.add_option("--timeout", timeout_s,
                   "accepted for command-template compatibility; enforcement is external");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        const vqdd::VerificationQuery query =
            vqdd::tools::load_query_pair(network_file, property_file);
        const vqdd::VerdictOutcome outcome = vqdd::bnb_verify(query, options);
        vqdd::tools::write_result_file(result_file, outcome, &query);
    } catch (const std::exception& e) {
        std::cerr << "refverify: " << e.what() << "\n";
        vqdd::tools::write_error_result(result_file, e.what());
        return 1;
    }
    return 0;
}

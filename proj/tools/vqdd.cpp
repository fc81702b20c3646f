// Command-line front end: reduce / eval / check-witness / convert / info.
//
// Exit codes: 0 success, 1 the initial query shows no discrepancy,
// 2 I/O or parse errors (including usage), 3 budget exhausted with zero
// progress.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "vqdd/engine.hpp"
#include "vqdd/numeric_text.hpp"
#include "vqdd/onnx.hpp"
#include "vqdd/query_json.hpp"
#include "vqdd/reference_verifiers.hpp"
#include "vqdd/vnnlib.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kNoDiscrepancy = 1;
constexpr int kIoOrParse = 2;
constexpr int kBudgetNoProgress = 3;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw vqdd::InvalidInputError("cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct QuerySources {
    std::string query_file;
    std::string network_file;
    std::string property_file;

    void add_options(CLI::App* cmd, bool need_property) {
        cmd->add_option("--query", query_file, "query as canonical JSON");
        cmd->add_option("--network", network_file, "network as ONNX");
        if (need_property)
            cmd->add_option("--property", property_file, "property as VNN-LIB text");
    }

    vqdd::VerificationQuery load_query() const {
        if (!query_file.empty()) return vqdd::read_query(query_file).query;
        if (network_file.empty() || property_file.empty())
            throw vqdd::InvalidInputError("provide either --query or --network and --property");
        return vqdd::VerificationQuery(vqdd::load_onnx(network_file),
                                       vqdd::parse_vnnlib(read_text_file(property_file)));
    }

    vqdd::Network load_network() const {
        if (!query_file.empty()) return vqdd::read_query(query_file).query.network();
        if (network_file.empty())
            throw vqdd::InvalidInputError("provide either --query or --network");
        return vqdd::load_onnx(network_file);
    }
};

Eigen::VectorXd parse_point(const std::string& text) {
    std::string normalized = text;
    for (char& c : normalized)
        if (c == ',') c = ' ';
    std::istringstream stream(normalized);
    std::vector<double> values;
    std::string token;
    while (stream >> token) {
        double value = 0.0;
        if (!vqdd::try_parse_double(token, value))
            throw vqdd::InvalidInputError("not a number: '" + token + "'");
        values.push_back(value);
    }
    if (values.empty()) throw vqdd::InvalidInputError("--input is empty");
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string render_vector(const Eigen::VectorXd& v) {
    std::string out;
    for (int i = 0; i < v.size(); ++i) {
        if (i) out += " ";
        out += vqdd::format_double(v(i));
    }
    return out;
}

// ---------------------------------------------------------------------------
// reduce
// ---------------------------------------------------------------------------

struct ReduceArgs {
    QuerySources sources;
    std::string faulty_template;
    std::vector<std::string> oracle_templates;
    bool single = false;
    double budget = std::numeric_limits<double>::infinity();
    double invocation_timeout = 60.0;
    double witness_tol = 0.0;
    std::string out_dir = "reduce-out";
    bool json = false;
    int pair_approach = 5;
    std::string fc_order = "descending";
    bool fc_before_conv = false;
    bool no_conv = false, no_fc = false, no_neurons = false;
};

int run_reduce(const ReduceArgs& args) {
    if (!args.single && args.oracle_templates.empty()) {
        std::cerr << "reduce: at least one --oracle is required unless --single is given\n";
        return kIoOrParse;
    }
    if (args.single && !args.oracle_templates.empty()) {
        std::cerr << "reduce: --single and --oracle are mutually exclusive\n";
        return kIoOrParse;
    }

    const vqdd::VerificationQuery initial = args.sources.load_query();

    vqdd::VerifierConfig faulty_config;
    faulty_config.name = "faulty";
    faulty_config.command_template = args.faulty_template;
    faulty_config.invocation_timeout = args.invocation_timeout;
    vqdd::ExternalVerifier faulty(faulty_config);

    std::vector<std::unique_ptr<vqdd::Verifier>> oracle_storage;
    std::vector<vqdd::Verifier*> oracles;
    for (std::size_t i = 0; i < args.oracle_templates.size(); ++i) {
        vqdd::VerifierConfig config;
        config.name = "oracle-" + std::to_string(i + 1);
        config.command_template = args.oracle_templates[i];
        config.invocation_timeout = args.invocation_timeout;
        oracle_storage.push_back(std::make_unique<vqdd::ExternalVerifier>(config));
        oracles.push_back(oracle_storage.back().get());
    }

    vqdd::EngineConfig config;
    config.global_budget = args.budget;
    config.mode = args.single ? vqdd::EngineConfig::Mode::Single : vqdd::EngineConfig::Mode::Dual;
    config.witness_tol = args.witness_tol;
    config.checkpoint_dir = args.out_dir;
    config.strategy.pair_priority = static_cast<vqdd::PairPriority>(args.pair_approach);
    config.strategy.fc_layer_order = args.fc_order == "ascending"
                                         ? vqdd::StrategyConfig::LayerOrder::Ascending
                                         : vqdd::StrategyConfig::LayerOrder::Descending;
    config.strategy.conv_before_fc = !args.fc_before_conv;
    config.strategy.conv_merges = !args.no_conv;
    config.strategy.fc_merges = !args.no_fc;
    config.strategy.neuron_merges = !args.no_neurons;
    if (args.json)
        config.on_attempt = [](const vqdd::AttemptRecord& record) {
            std::cout << vqdd::attempt_record_json(record) << "\n";
        };

    const vqdd::ReduceResult result = vqdd::reduce(config, faulty, oracles, initial);

    std::filesystem::create_directories(args.out_dir);
    const std::filesystem::path out(args.out_dir);
    vqdd::save_onnx(result.query.network(), out / "network.onnx");
    {
        std::ofstream prop(out / "property.vnnlib");
        prop << vqdd::emit_vnnlib(result.query.property());
    }
    vqdd::write_query(
        vqdd::QueryDocument{result.query,
                            {{"initial_size", std::to_string(result.initial_size)},
                             {"final_size", std::to_string(result.final_size)},
                             {"accepted_steps", std::to_string(result.accepted_steps)}}},
        out / "query.json");

    const int percent = result.initial_size == 0
                            ? 0
                            : static_cast<int>(std::floor(
                                  100.0 * (result.initial_size - result.final_size) /
                                  result.initial_size));
    if (args.json) {
        std::cout << "{\"event\": \"summary\", \"initial_size\": " << result.initial_size
                  << ", \"final_size\": " << result.final_size
                  << ", \"accepted_steps\": " << result.accepted_steps
                  << ", \"reduction_percent\": " << percent << ", \"budget_exhausted\": "
                  << (result.budget_exhausted ? "true" : "false") << "}\n";
    } else {
        std::cout << "initial size: " << result.initial_size << "\n"
                  << "final size:   " << result.final_size << "\n"
                  << "steps:        " << result.accepted_steps << " accepted, "
                  << result.trace.records.size() << " attempted\n"
                  << "reduction:    " << percent << "%\n"
                  << "output:       " << args.out_dir << "\n";
    }

    if (result.budget_exhausted && result.accepted_steps == 0) return kBudgetNoProgress;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"delta-debugging reducer for neural-network verification queries"};
    app.require_subcommand(1);

    ReduceArgs reduce_args;
    CLI::App* reduce = app.add_subcommand("reduce", "shrink a bug-triggering query");
    reduce_args.sources.add_options(reduce, true);
    reduce->add_option("--faulty", reduce_args.faulty_template,
                       "faulty verifier command template with {network} {property} {result} "
                       "{timeout_s} placeholders")
        ->required();
    reduce->add_option("--oracle", reduce_args.oracle_templates,
                       "oracle verifier command template (repeatable)");
    reduce->add_flag("--single", reduce_args.single,
                     "single-verifier mode: rely on invalid witnesses only");
    reduce->add_option("--budget", reduce_args.budget, "wall-clock budget in seconds");
    reduce->add_option("--timeout", reduce_args.invocation_timeout,
                       "per-invocation timeout in seconds");
    reduce->add_option("--witness-tol", reduce_args.witness_tol,
                       "slack for witness classification");
    reduce->add_option("--out", reduce_args.out_dir, "output directory");
    reduce->add_flag("--json", reduce_args.json, "emit attempt records as JSON lines");
    reduce->add_option("--pair-approach", reduce_args.pair_approach,
                       "neuron-pair prioritization approach (1-5)")
        ->check(CLI::Range(1, 5));
    reduce->add_option("--fc-order", reduce_args.fc_order,
                       "order of fully-connected merges over layers")
        ->check(CLI::IsMember({"ascending", "descending"}));
    reduce->add_flag("--fc-before-conv", reduce_args.fc_before_conv,
                     "attempt fully-connected merges before convolution merges");
    reduce->add_flag("--no-conv-merges", reduce_args.no_conv, "disable convolution merges");
    reduce->add_flag("--no-fc-merges", reduce_args.no_fc, "disable fully-connected merges");
    reduce->add_flag("--no-neuron-merges", reduce_args.no_neurons, "disable neuron merges");

    QuerySources eval_sources;
    std::string eval_input;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a network on a point");
    eval_sources.add_options(eval, false);
    eval->add_option("--input", eval_input, "input vector, comma or space separated")->required();

    QuerySources check_sources;
    std::string check_input;
    double check_tol = 0.0;
    CLI::App* check = app.add_subcommand("check-witness", "classify a witness against a query");
    check_sources.add_options(check, true);
    check->add_option("--input", check_input, "witness vector")->required();
    check->add_option("--tol", check_tol, "classification slack");

    QuerySources convert_sources;
    std::string out_network, out_property, out_query;
    CLI::App* convert =
        app.add_subcommand("convert", "convert between JSON and ONNX + VNN-LIB");
    convert_sources.add_options(convert, true);
    convert->add_option("--out-network", out_network, "write network as ONNX");
    convert->add_option("--out-property", out_property, "write property as VNN-LIB");
    convert->add_option("--out-query", out_query, "write query as canonical JSON");

    QuerySources info_sources;
    CLI::App* info = app.add_subcommand("info", "print network size and layer table");
    info_sources.add_options(info, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kIoOrParse;
    }

    try {
        if (reduce->parsed()) return run_reduce(reduce_args);

        if (eval->parsed()) {
            const vqdd::Network network = eval_sources.load_network();
            std::cout << render_vector(network.evaluate(parse_point(eval_input))) << "\n";
            return kOk;
        }

        if (check->parsed()) {
            const vqdd::VerificationQuery query = check_sources.load_query();
            const vqdd::WitnessStatus status =
                vqdd::validate_witness(query, parse_point(check_input), check_tol);
            std::cout << vqdd::witness_status_name(status) << "\n";
            return kOk;
        }

        if (convert->parsed()) {
            if (out_network.empty() && out_property.empty() && out_query.empty()) {
                std::cerr << "convert: nothing to do; give --out-network/--out-property/"
                             "--out-query\n";
                return kIoOrParse;
            }
            const vqdd::VerificationQuery query = convert_sources.load_query();
            if (!out_network.empty()) vqdd::save_onnx(query.network(), out_network);
            if (!out_property.empty()) {
                std::ofstream out(out_property, std::ios::trunc);
                if (!out) throw vqdd::InvalidInputError("cannot write '" + out_property + "'");
                out << vqdd::emit_vnnlib(query.property());
            }
            if (!out_query.empty()) vqdd::write_query(vqdd::QueryDocument{query, {}}, out_query);
            return kOk;
        }

        if (info->parsed()) {
            const vqdd::Network network = info_sources.load_network();
            std::cout << "neurons: " << network.size()
                      << ", layers: " << network.num_layers() + 1 << "\n";
            std::cout << "input_dim: " << network.input_dim()
                      << ", output_dim: " << network.output_dim() << "\n";
            for (int t = 1; t <= network.num_layers(); ++t) {
                const vqdd::Layer& layer = network.layers()[t - 1];
                const char* type =
                    std::holds_alternative<vqdd::FullyConnectedLayer>(layer) ? "fc" : "conv";
                const char* activation =
                    layer_activation(layer) == vqdd::ActivationKind::ReLU ? "relu" : "none";
                std::cout << "  layer " << t << ": " << type << " " << layer_fan_in(layer)
                          << " -> " << layer_fan_out(layer) << ", activation " << activation
                          << "\n";
            }
            return kOk;
        }
    } catch (const vqdd::NoDiscrepancyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNoDiscrepancy;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoOrParse;
    }
    return kIoOrParse;
}

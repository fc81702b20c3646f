#include "vqdd/verifier.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "vqdd/errors.hpp"
#include "vqdd/numeric_text.hpp"
#include "vqdd/onnx.hpp"
#include "vqdd/sexpr.hpp"
#include "vqdd/vnnlib.hpp"

namespace vqdd {

namespace {

namespace fs = std::filesystem;

fs::path scratch_root() {
    if (const char* env = std::getenv("DELBUG_SCRATCH"); env && *env) return fs::path(env);
    return fs::temp_directory_path() / "vqdd-scratch";
}

fs::path make_scratch_dir() {
    const fs::path root = scratch_root();
    fs::create_directories(root);
    std::string pattern = (root / "invoke-XXXXXX").string();
    if (!mkdtemp(pattern.data()))
        throw InvalidInputError("cannot create scratch directory under '" + root.string() + "'");
    return fs::path(pattern);
}

// RAII removal of the per-invocation scratch directory.
struct ScratchGuard {
    fs::path dir;
    ~ScratchGuard() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

std::string substitute_placeholders(const std::string& tmpl,
                                    const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const std::size_t open = tmpl.find('{', pos);
        if (open == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        const std::size_t close = tmpl.find('}', open);
        if (close == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        out.append(tmpl, pos, open - pos);
        const std::string key = tmpl.substr(open + 1, close - open - 1);
        const auto it = values.find(key);
        if (it != values.end())
            out += it->second;
        else
            out.append(tmpl, open, close - open + 1);  // leave unknown placeholders alone
        pos = close + 1;
    }
    return out;
}

struct ProcessResult {
    bool timed_out = false;
    int exit_status = -1;
    double wall_time = 0.0;
};

ProcessResult run_command(const std::string& command, const fs::path& cwd,
                          const fs::path& output_file, double timeout_seconds) {
    const auto start = std::chrono::steady_clock::now();

    const pid_t pid = fork();
    if (pid < 0) throw Error("fork failed");
    if (pid == 0) {
        setpgid(0, 0);
        if (!cwd.empty()) {
            if (chdir(cwd.c_str()) != 0) _exit(127);
        }
        const int fd = open(output_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd >= 0) {
            dup2(fd, STDOUT_FILENO);
            dup2(fd, STDERR_FILENO);
            close(fd);
        }
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }

    ProcessResult result;
    const auto deadline =
        start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                    std::chrono::duration<double>(timeout_seconds));
    for (;;) {
        int status = 0;
        const pid_t done = waitpid(pid, &status, WNOHANG);
        if (done == pid) {
            result.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : -WTERMSIG(status);
            break;
        }
        if (done < 0) {
            result.exit_status = -1;
            break;
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            result.timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }

    result.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

std::string read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

VerdictOutcome error_outcome(std::string raw) {
    VerdictOutcome outcome;
    outcome.verdict = Verdict::Error;
    outcome.raw_output = std::move(raw);
    return outcome;
}

}  // namespace

std::string verdict_name(Verdict verdict) {
    switch (verdict) {
        case Verdict::Sat: return "SAT";
        case Verdict::Unsat: return "UNSAT";
        case Verdict::Error: return "ERROR";
        case Verdict::Timeout: return "TIMEOUT";
    }
    return "ERROR";
}

void VerifierConfig::validate() const {
    for (const char* placeholder : {"{network}", "{property}", "{result}"}) {
        if (command_template.find(placeholder) == std::string::npos)
            throw InvalidInputError("verifier '" + name + "': command template is missing " +
                                    placeholder);
    }
}

VerdictOutcome parse_result_text(const std::string& text, int input_dim) {
    // First whitespace-delimited token decides the verdict.
    std::istringstream stream(text);
    std::string token;
    if (!(stream >> token)) return error_outcome(text);

    VerdictOutcome outcome;
    outcome.raw_output = text;
    if (token == "unsat") {
        outcome.verdict = Verdict::Unsat;
        return outcome;
    }
    if (token == "timeout") {
        outcome.verdict = Verdict::Timeout;
        return outcome;
    }
    if (token == "error") {
        outcome.verdict = Verdict::Error;
        return outcome;
    }
    if (token != "sat") return error_outcome(text);

    // Witness: (X_i value) pairs, either as a flat sequence or wrapped in one
    // outer list. Y pairs are accepted and ignored.
    const auto rest_pos = stream.tellg();
    const std::string rest =
        rest_pos < 0 ? std::string() : text.substr(static_cast<std::size_t>(rest_pos));
    std::vector<Sexpr> forms;
    try {
        forms = parse_sexprs(rest);
    } catch (const ParseError&) {
        return error_outcome(text);
    }
    if (forms.size() == 1 && forms[0].is_list && !forms[0].items.empty() &&
        forms[0].items[0].is_list) {
        forms = forms[0].items;  // unwrap ((X_0 v) (X_1 v) ...)
    }

    Eigen::VectorXd witness = Eigen::VectorXd::Constant(input_dim, 0.0);
    std::vector<bool> seen(static_cast<std::size_t>(input_dim), false);
    for (const Sexpr& form : forms) {
        if (!form.is_list || form.items.size() != 2 || !form.items[0].is_atom() ||
            !form.items[1].is_atom())
            return error_outcome(text);
        const std::string& name = form.items[0].atom;
        double value = 0.0;
        if (!try_parse_double(form.items[1].atom, value)) return error_outcome(text);
        if (name.rfind("Y_", 0) == 0) continue;
        if (name.rfind("X_", 0) != 0) return error_outcome(text);
        int index = -1;
        try {
            index = std::stoi(name.substr(2));
        } catch (...) {
            return error_outcome(text);
        }
        if (index < 0 || index >= input_dim) return error_outcome(text);
        witness(index) = value;
        seen[static_cast<std::size_t>(index)] = true;
    }
    for (bool s : seen)
        if (!s) return error_outcome(text);

    outcome.verdict = Verdict::Sat;
    outcome.witness = std::move(witness);
    return outcome;
}

VerdictOutcome invoke(const VerifierConfig& config, const VerificationQuery& query) {
    config.validate();

    const ScratchGuard scratch{make_scratch_dir()};
    const fs::path network_file = scratch.dir / "network.onnx";
    const fs::path property_file = scratch.dir / "property.vnnlib";
    const fs::path result_file = scratch.dir / "result.txt";
    const fs::path output_file = scratch.dir / "output.log";

    try {
        save_onnx(query.network(), network_file);
        std::ofstream prop(property_file);
        prop << emit_vnnlib(query.property());
    } catch (const Error& e) {
        return error_outcome(std::string("failed to write query files: ") + e.what());
    }

    const std::string command = substitute_placeholders(
        config.command_template,
        {{"network", network_file.string()},
         {"property", property_file.string()},
         {"result", result_file.string()},
         {"timeout_s",
          std::to_string(static_cast<long>(std::ceil(config.invocation_timeout)))}});

    const ProcessResult process =
        run_command(command, config.workdir.empty() ? scratch.dir : config.workdir, output_file,
                    config.invocation_timeout);

    if (process.timed_out) {
        VerdictOutcome outcome;
        outcome.verdict = Verdict::Timeout;
        outcome.wall_time = process.wall_time;
        outcome.raw_output = "invocation timed out after " +
                             format_double(config.invocation_timeout) + " s";
        return outcome;
    }

    VerdictOutcome outcome;
    std::error_code ec;
    if (fs::exists(result_file, ec)) {
        outcome = parse_result_text(read_file(result_file), query.network().input_dim());
    } else {
        outcome = error_outcome("no result file produced (exit status " +
                                std::to_string(process.exit_status) +
                                "); output: " + read_file(output_file));
    }
    outcome.wall_time = process.wall_time;
    return outcome;
}

std::string witness_status_name(WitnessStatus status) {
    switch (status) {
        case WitnessStatus::Valid: return "valid";
        case WitnessStatus::OutsideInputRegion: return "outside-input-region";
        case WitnessStatus::OutputViolation: return "output-violation";
    }
    return "output-violation";
}

WitnessStatus validate_witness(const VerificationQuery& query, const Eigen::VectorXd& witness,
                               double tol) {
    if (witness.size() != query.network().input_dim())
        throw InvalidInputError("witness has dimension " + std::to_string(witness.size()) +
                                ", network expects " +
                                std::to_string(query.network().input_dim()));
    if (!query.property().contains_input(witness, tol)) return WitnessStatus::OutsideInputRegion;
    if (!query.property().satisfies_output(query.network().evaluate(witness), tol))
        return WitnessStatus::OutputViolation;
    return WitnessStatus::Valid;
}

ExternalVerifier::ExternalVerifier(VerifierConfig config) : config_(std::move(config)) {
    config_.validate();
}

}  // namespace vqdd

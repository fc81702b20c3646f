#include "vqdd/query_json.hpp"

#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "vqdd/errors.hpp"
#include "vqdd/numeric_text.hpp"
#include "vqdd/onnx.hpp"
#include "vqdd/vnnlib.hpp"

namespace vqdd {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "vqdd-query-v1";

// ---------------------------------------------------------------------------
// Writing. The emitter is hand-rolled: field order is fixed and every number
// is rendered with %.17g, which json libraries do not guarantee.
// ---------------------------------------------------------------------------

void append_escaped(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void append_vector(std::string& out, const Eigen::VectorXd& v) {
    out += '[';
    for (int i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v(i));
    }
    out += ']';
}

void append_network(std::string& out, const Network& network) {
    out += "{\n    \"input_dim\": " + std::to_string(network.input_dim()) +
           ",\n    \"layers\": [\n";
    for (int t = 1; t <= network.num_layers(); ++t) {
        const Layer& layer = network.layers()[t - 1];
        const char* activation =
            layer_activation(layer) == ActivationKind::ReLU ? "relu" : "none";
        out += "      {";
        if (const auto* fc = std::get_if<FullyConnectedLayer>(&layer)) {
            out += "\"type\": \"fully_connected\", \"activation\": \"";
            out += activation;
            out += "\", \"weights\": [";
            for (int r = 0; r < fc->weights.rows(); ++r) {
                if (r) out += ", ";
                out += '[';
                for (int c = 0; c < fc->weights.cols(); ++c) {
                    if (c) out += ", ";
                    out += format_double(fc->weights(r, c));
                }
                out += ']';
            }
            out += "], \"biases\": ";
            append_vector(out, fc->biases);
        } else {
            const auto& conv = std::get<ConvolutionalLayer>(layer);
            out += "\"type\": \"convolutional\", \"activation\": \"";
            out += activation;
            out += "\", \"height\": " + std::to_string(conv.height) +
                   ", \"width\": " + std::to_string(conv.width) +
                   ", \"kernel_size\": " + std::to_string(conv.kernel_size) +
                   ", \"stride\": " + std::to_string(conv.stride) +
                   ", \"padding\": " + std::to_string(conv.padding) +
                   ", \"in_channels\": " + std::to_string(conv.in_channels) +
                   ", \"out_channels\": " + std::to_string(conv.out_channels) +
                   ", \"kernel\": [";
            for (std::size_t i = 0; i < conv.kernel.size(); ++i) {
                if (i) out += ", ";
                out += format_double(conv.kernel[i]);
            }
            out += "], \"biases\": ";
            append_vector(out, conv.biases);
        }
        out += t == network.num_layers() ? "}\n" : "},\n";
    }
    out += "    ]\n  }";
}

void append_property(std::string& out, const Property& property) {
    out += "{\n    \"input_box\": [";
    for (int i = 0; i < property.input_dim(); ++i) {
        if (i) out += ", ";
        out += "{\"lower\": " + format_double(property.input_box()[i].lower) +
               ", \"upper\": " + format_double(property.input_box()[i].upper) + "}";
    }
    out += "],\n    \"output_dim\": " + std::to_string(property.output_dim()) +
           ",\n    \"output_region\": [";
    const auto& region = property.output_region();
    for (std::size_t d = 0; d < region.size(); ++d) {
        if (d) out += ", ";
        out += '[';
        for (std::size_t k = 0; k < region[d].size(); ++k) {
            if (k) out += ", ";
            const LinearInequality& ineq = region[d][k];
            out += "{\"coeffs\": ";
            append_vector(out, ineq.coeffs);
            out += ", \"relation\": \"";
            out += ineq.relation == Relation::LessEq ? "<=" : ">=";
            out += "\", \"bound\": " + format_double(ineq.bound) + "}";
        }
        out += ']';
    }
    out += "]\n  }";
}

// ---------------------------------------------------------------------------
// Reading.
// ---------------------------------------------------------------------------

[[noreturn]] void schema_error(const std::string& message) {
    throw ParseError("query document: " + message, 1, 1);
}

Eigen::VectorXd vector_from_json(const json& j, const char* what) {
    if (!j.is_array()) schema_error(std::string(what) + " must be an array");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) schema_error(std::string(what) + " must contain numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Network network_from_json(const json& j) {
    if (!j.is_object()) schema_error("network must be an object");
    if (!j.contains("input_dim") || !j["input_dim"].is_number_integer())
        schema_error("network.input_dim must be an integer");
    if (!j.contains("layers") || !j["layers"].is_array())
        schema_error("network.layers must be an array");

    std::vector<Layer> layers;
    for (const json& lj : j["layers"]) {
        if (!lj.is_object() || !lj.contains("type")) schema_error("layer must name its type");
        const std::string type = lj["type"].get<std::string>();
        ActivationKind activation = ActivationKind::None;
        if (lj.contains("activation")) {
            const std::string a = lj["activation"].get<std::string>();
            if (a == "relu")
                activation = ActivationKind::ReLU;
            else if (a != "none")
                schema_error("unknown activation '" + a + "'");
        }
        if (type == "fully_connected") {
            FullyConnectedLayer fc;
            fc.activation = activation;
            const json& wj = lj.value("weights", json::array());
            if (!wj.is_array() || wj.empty()) schema_error("fully connected layer needs weights");
            const std::size_t cols = wj[0].is_array() ? wj[0].size() : 0;
            fc.weights.resize(static_cast<Eigen::Index>(wj.size()),
                              static_cast<Eigen::Index>(cols));
            for (std::size_t r = 0; r < wj.size(); ++r) {
                if (!wj[r].is_array() || wj[r].size() != cols)
                    schema_error("weight rows must have equal length");
                for (std::size_t c = 0; c < cols; ++c)
                    fc.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                        wj[r][c].get<double>();
            }
            fc.biases = vector_from_json(lj.value("biases", json::array()), "biases");
            layers.emplace_back(std::move(fc));
        } else if (type == "convolutional") {
            ConvolutionalLayer conv;
            conv.activation = activation;
            const auto geti = [&](const char* key) {
                if (!lj.contains(key) || !lj[key].is_number_integer())
                    schema_error(std::string("convolutional layer needs integer '") + key + "'");
                return lj[key].get<int>();
            };
            conv.height = geti("height");
            conv.width = geti("width");
            conv.kernel_size = geti("kernel_size");
            conv.stride = geti("stride");
            conv.padding = geti("padding");
            conv.in_channels = geti("in_channels");
            conv.out_channels = geti("out_channels");
            const json& kj = lj.value("kernel", json::array());
            if (!kj.is_array()) schema_error("kernel must be an array");
            conv.kernel.reserve(kj.size());
            for (const json& v : kj) conv.kernel.push_back(v.get<double>());
            conv.biases = vector_from_json(lj.value("biases", json::array()), "biases");
            layers.emplace_back(std::move(conv));
        } else {
            schema_error("unknown layer type '" + type + "'");
        }
    }
    return Network(j["input_dim"].get<int>(), std::move(layers));
}

Property property_from_json(const json& j) {
    if (!j.is_object()) schema_error("property must be an object");
    if (!j.contains("input_box") || !j["input_box"].is_array())
        schema_error("property.input_box must be an array");
    std::vector<Interval> box;
    for (const json& ij : j["input_box"]) {
        if (!ij.is_object() || !ij.contains("lower") || !ij.contains("upper"))
            schema_error("input_box entries need lower and upper");
        box.push_back({ij["lower"].get<double>(), ij["upper"].get<double>()});
    }
    if (!j.contains("output_dim") || !j["output_dim"].is_number_integer())
        schema_error("property.output_dim must be an integer");
    const int output_dim = j["output_dim"].get<int>();

    std::vector<Conjunction> region;
    if (!j.contains("output_region") || !j["output_region"].is_array())
        schema_error("property.output_region must be an array");
    for (const json& dj : j["output_region"]) {
        if (!dj.is_array()) schema_error("output_region entries must be arrays");
        Conjunction conjunct;
        for (const json& cj : dj) {
            LinearInequality ineq;
            ineq.coeffs = vector_from_json(cj.value("coeffs", json::array()), "coeffs");
            const std::string rel = cj.value("relation", "");
            if (rel == "<=")
                ineq.relation = Relation::LessEq;
            else if (rel == ">=")
                ineq.relation = Relation::GreaterEq;
            else
                schema_error("relation must be '<=' or '>='");
            if (!cj.contains("bound") || !cj["bound"].is_number())
                schema_error("inequality needs a numeric bound");
            ineq.bound = cj["bound"].get<double>();
            conjunct.push_back(std::move(ineq));
        }
        region.push_back(std::move(conjunct));
    }
    return Property(std::move(box), output_dim, std::move(region));
}

}  // namespace

std::string write_query_json(const QueryDocument& doc) {
    std::string out = "{\n  \"format\": \"";
    out += kFormatTag;
    out += "\",\n  \"metadata\": {";
    bool first = true;
    for (const auto& [key, value] : doc.metadata) {
        if (!first) out += ", ";
        first = false;
        append_escaped(out, key);
        out += ": ";
        append_escaped(out, value);
    }
    out += "},\n  \"network\": ";
    append_network(out, doc.query.network());
    out += ",\n  \"property\": ";
    append_property(out, doc.query.property());
    out += "\n}\n";
    return out;
}

void write_query(const QueryDocument& doc, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw InvalidInputError("cannot write '" + file.string() + "'");
    out << write_query_json(doc);
}

namespace {

QueryDocument document_from_json(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) schema_error("top level must be an object");
    if (j.value("format", kFormatTag) != kFormatTag)
        schema_error("unknown format tag '" + j.value("format", "") + "'");

    std::map<std::string, std::string> metadata;
    if (j.contains("metadata")) {
        if (!j["metadata"].is_object()) schema_error("metadata must be an object of strings");
        for (const auto& [key, value] : j["metadata"].items()) {
            if (!value.is_string()) schema_error("metadata values must be strings");
            metadata[key] = value.get<std::string>();
        }
    }

    std::optional<Network> network;
    if (j.contains("network")) {
        network = network_from_json(j["network"]);
    } else if (j.contains("network_path")) {
        network = load_onnx(base_dir / j["network_path"].get<std::string>());
    } else {
        schema_error("missing network or network_path");
    }

    std::optional<Property> property;
    if (j.contains("property")) {
        property = property_from_json(j["property"]);
    } else if (j.contains("property_path")) {
        const std::filesystem::path path = base_dir / j["property_path"].get<std::string>();
        std::ifstream in(path);
        if (!in) throw InvalidInputError("cannot open '" + path.string() + "'");
        std::stringstream buffer;
        buffer << in.rdbuf();
        property = parse_vnnlib(buffer.str());
    } else {
        schema_error("missing property or property_path");
    }

    return QueryDocument{VerificationQuery(std::move(*network), std::move(*property)),
                         std::move(metadata)};
}

}  // namespace

QueryDocument parse_query_json(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), 1, 1);
    }
    try {
        return document_from_json(j, base_dir);
    } catch (const json::exception& e) {
        // Type errors from unexpected value kinds surface as schema violations.
        throw ParseError(std::string("query document: ") + e.what(), 1, 1);
    }
}

QueryDocument read_query(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw InvalidInputError("cannot open '" + file.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_query_json(buffer.str(), file.parent_path());
}

}  // namespace vqdd

#include "vqdd/onnx.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <utility>

#include "vqdd/errors.hpp"

namespace vqdd {

namespace {

// ---------------------------------------------------------------------------
// Protobuf wire format. Only what the ONNX subset below needs: varints,
// 32/64-bit scalars and length-delimited fields.
// ---------------------------------------------------------------------------

enum WireType { kVarint = 0, kFixed64 = 1, kLengthDelimited = 2, kFixed32 = 5 };

class WireWriter {
public:
    const std::string& buffer() const { return buf_; }

    void varint(std::uint64_t value) {
        while (value >= 0x80) {
            buf_.push_back(static_cast<char>((value & 0x7F) | 0x80));
            value >>= 7;
        }
        buf_.push_back(static_cast<char>(value));
    }

    void tag(int field, WireType type) {
        varint((static_cast<std::uint64_t>(field) << 3) | type);
    }

    void int64_field(int field, std::int64_t value) {
        tag(field, kVarint);
        varint(static_cast<std::uint64_t>(value));
    }

    void string_field(int field, std::string_view value) {
        tag(field, kLengthDelimited);
        varint(value.size());
        buf_.append(value.data(), value.size());
    }

    void message_field(int field, const WireWriter& message) {
        string_field(field, message.buf_);
    }

    /// Appends already-framed fields verbatim.
    void raw_append(const WireWriter& other) { buf_ += other.buf_; }

    void float_field(int field, float value) {
        tag(field, kFixed32);
        std::uint32_t bits;
        std::memcpy(&bits, &value, sizeof(bits));
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
    }

    void packed_int64_field(int field, const std::vector<std::int64_t>& values) {
        WireWriter payload;
        for (std::int64_t v : values) payload.varint(static_cast<std::uint64_t>(v));
        string_field(field, payload.buf_);
    }

private:
    std::string buf_;
};

class WireReader {
public:
    WireReader(const std::uint8_t* data, std::size_t size) : p_(data), end_(data + size) {}

    bool done() const { return p_ >= end_; }

    // Reads the next field header; returns false at end of buffer.
    bool next(int& field, WireType& type) {
        if (done()) return false;
        const std::uint64_t key = varint();
        field = static_cast<int>(key >> 3);
        type = static_cast<WireType>(key & 0x7);
        return true;
    }

    std::uint64_t varint() {
        std::uint64_t value = 0;
        int shift = 0;
        for (;;) {
            if (p_ >= end_) throw InvalidModelError("truncated protobuf varint");
            const std::uint8_t byte = *p_++;
            if (shift >= 64) throw InvalidModelError("oversized protobuf varint");
            value |= static_cast<std::uint64_t>(byte & 0x7F) << shift;
            if (!(byte & 0x80)) return value;
            shift += 7;
        }
    }

    std::pair<const std::uint8_t*, std::size_t> bytes() {
        const std::uint64_t size = varint();
        if (size > static_cast<std::uint64_t>(end_ - p_))
            throw InvalidModelError("truncated protobuf field");
        const std::uint8_t* start = p_;
        p_ += size;
        return {start, static_cast<std::size_t>(size)};
    }

    float fixed32_float() {
        require(4);
        std::uint32_t bits = 0;
        for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(*p_++) << (8 * i);
        float value;
        std::memcpy(&value, &bits, sizeof(value));
        return value;
    }

    void skip(WireType type) {
        switch (type) {
            case kVarint:
                varint();
                return;
            case kFixed64:
                require(8);
                p_ += 8;
                return;
            case kLengthDelimited:
                bytes();
                return;
            case kFixed32:
                require(4);
                p_ += 4;
                return;
        }
        throw InvalidModelError("unsupported protobuf wire type " + std::to_string(type));
    }

private:
    void require(std::size_t n) {
        if (static_cast<std::size_t>(end_ - p_) < n)
            throw InvalidModelError("truncated protobuf field");
    }

    const std::uint8_t* p_;
    const std::uint8_t* end_;
};

// ---------------------------------------------------------------------------
// The ONNX messages this importer understands. Unknown fields are skipped.
// ---------------------------------------------------------------------------

constexpr int kDataTypeFloat = 1;
constexpr int kDataTypeInt64 = 7;
constexpr int kDataTypeDouble = 11;

struct TensorProto {
    std::vector<std::int64_t> dims;
    std::int32_t data_type = 0;
    std::vector<float> float_data;
    std::vector<std::int64_t> int64_data;
    std::vector<double> double_data;
    std::string raw_data;
    std::string name;

    std::int64_t element_count() const {
        std::int64_t n = 1;
        for (std::int64_t d : dims) n *= d;
        return n;
    }

    std::vector<double> as_doubles() const {
        std::vector<double> out;
        if (data_type == kDataTypeFloat) {
            if (!raw_data.empty()) {
                out.resize(raw_data.size() / 4);
                for (std::size_t i = 0; i < out.size(); ++i) {
                    float f;
                    std::memcpy(&f, raw_data.data() + 4 * i, 4);
                    out[i] = f;
                }
            } else {
                out.assign(float_data.begin(), float_data.end());
            }
        } else if (data_type == kDataTypeDouble) {
            if (!raw_data.empty()) {
                out.resize(raw_data.size() / 8);
                std::memcpy(out.data(), raw_data.data(), out.size() * 8);
            } else {
                out = double_data;
            }
        } else {
            throw UnsupportedModelError("tensor '" + name + "' has unsupported data type " +
                                        std::to_string(data_type));
        }
        if (static_cast<std::int64_t>(out.size()) != element_count())
            throw InvalidModelError("tensor '" + name + "' has inconsistent element count");
        return out;
    }

    std::vector<std::int64_t> as_int64s() const {
        if (data_type != kDataTypeInt64)
            throw UnsupportedModelError("tensor '" + name + "' is not an int64 tensor");
        if (!raw_data.empty()) {
            std::vector<std::int64_t> out(raw_data.size() / 8);
            std::memcpy(out.data(), raw_data.data(), out.size() * 8);
            return out;
        }
        return int64_data;
    }
};

struct AttributeProto {
    std::string name;
    float f = 0.0f;
    bool has_f = false;
    std::int64_t i = 0;
    std::vector<std::int64_t> ints;
};

struct ValueInfoProto {
    std::string name;
    std::vector<std::int64_t> shape;  // empty when unknown / symbolic
};

struct NodeProto {
    std::vector<std::string> input;
    std::vector<std::string> output;
    std::string name;
    std::string op_type;
    std::vector<AttributeProto> attribute;
};

struct GraphProto {
    std::vector<NodeProto> node;
    std::string name;
    std::vector<TensorProto> initializer;
    std::vector<ValueInfoProto> input;
    std::vector<ValueInfoProto> output;
};

std::string read_string(WireReader& reader) {
    const auto [data, size] = reader.bytes();
    return std::string(reinterpret_cast<const char*>(data), size);
}

TensorProto parse_tensor(const std::uint8_t* data, std::size_t size) {
    TensorProto tensor;
    WireReader reader(data, size);
    int field;
    WireType type;
    while (reader.next(field, type)) {
        switch (field) {
            case 1:  // dims
                if (type == kVarint) {
                    tensor.dims.push_back(static_cast<std::int64_t>(reader.varint()));
                } else {
                    const auto [p, n] = reader.bytes();
                    WireReader packed(p, n);
                    while (!packed.done())
                        tensor.dims.push_back(static_cast<std::int64_t>(packed.varint()));
                }
                break;
            case 2:  // data_type
                tensor.data_type = static_cast<std::int32_t>(reader.varint());
                break;
            case 4: {  // float_data (packed)
                const auto [p, n] = reader.bytes();
                tensor.float_data.resize(n / 4);
                std::memcpy(tensor.float_data.data(), p, tensor.float_data.size() * 4);
                break;
            }
            case 7: {  // int64_data (packed varints)
                const auto [p, n] = reader.bytes();
                WireReader packed(p, n);
                while (!packed.done())
                    tensor.int64_data.push_back(static_cast<std::int64_t>(packed.varint()));
                break;
            }
            case 8:
                tensor.name = read_string(reader);
                break;
            case 9:
                tensor.raw_data = read_string(reader);
                break;
            case 10: {  // double_data (packed)
                const auto [p, n] = reader.bytes();
                tensor.double_data.resize(n / 8);
                std::memcpy(tensor.double_data.data(), p, tensor.double_data.size() * 8);
                break;
            }
            default:
                reader.skip(type);
        }
    }
    return tensor;
}

AttributeProto parse_attribute(const std::uint8_t* data, std::size_t size) {
    AttributeProto attr;
    WireReader reader(data, size);
    int field;
    WireType type;
    while (reader.next(field, type)) {
        switch (field) {
            case 1:
                attr.name = read_string(reader);
                break;
            case 2:  // f
                attr.f = reader.fixed32_float();
                attr.has_f = true;
                break;
            case 3:
                attr.i = static_cast<std::int64_t>(reader.varint());
                break;
            case 8: {  // ints
                if (type == kVarint) {
                    attr.ints.push_back(static_cast<std::int64_t>(reader.varint()));
                } else {
                    const auto [p, n] = reader.bytes();
                    WireReader packed(p, n);
                    while (!packed.done())
                        attr.ints.push_back(static_cast<std::int64_t>(packed.varint()));
                }
                break;
            }
            default:
                reader.skip(type);
        }
    }
    return attr;
}

std::vector<std::int64_t> parse_shape(const std::uint8_t* data, std::size_t size) {
    // TensorShapeProto: repeated Dimension dim = 1; Dimension.dim_value = 1.
    std::vector<std::int64_t> dims;
    WireReader reader(data, size);
    int field;
    WireType type;
    while (reader.next(field, type)) {
        if (field == 1 && type == kLengthDelimited) {
            const auto [p, n] = reader.bytes();
            WireReader dim_reader(p, n);
            std::int64_t value = -1;  // unknown / symbolic
            int dim_field;
            WireType dim_type;
            while (dim_reader.next(dim_field, dim_type)) {
                if (dim_field == 1 && dim_type == kVarint)
                    value = static_cast<std::int64_t>(dim_reader.varint());
                else
                    dim_reader.skip(dim_type);
            }
            dims.push_back(value);
        } else {
            reader.skip(type);
        }
    }
    return dims;
}

ValueInfoProto parse_value_info(const std::uint8_t* data, std::size_t size) {
    ValueInfoProto info;
    WireReader reader(data, size);
    int field;
    WireType type;
    while (reader.next(field, type)) {
        if (field == 1) {
            info.name = read_string(reader);
        } else if (field == 2) {
            // TypeProto → tensor_type = 1 → TypeProto.Tensor{elem_type=1, shape=2}
            const auto [tp, tn] = reader.bytes();
            WireReader type_reader(tp, tn);
            int tfield;
            WireType ttype;
            while (type_reader.next(tfield, ttype)) {
                if (tfield == 1 && ttype == kLengthDelimited) {
                    const auto [sp, sn] = type_reader.bytes();
                    WireReader tensor_reader(sp, sn);
                    int sfield;
                    WireType stype;
                    while (tensor_reader.next(sfield, stype)) {
                        if (sfield == 2 && stype == kLengthDelimited) {
                            const auto [shp, shn] = tensor_reader.bytes();
                            info.shape = parse_shape(shp, shn);
                        } else {
                            tensor_reader.skip(stype);
                        }
                    }
                } else {
                    type_reader.skip(ttype);
                }
            }
        } else {
            reader.skip(type);
        }
    }
    return info;
}

NodeProto parse_node(const std::uint8_t* data, std::size_t size) {
    NodeProto node;
    WireReader reader(data, size);
    int field;
    WireType type;
    while (reader.next(field, type)) {
        switch (field) {
            case 1:
                node.input.push_back(read_string(reader));
                break;
            case 2:
                node.output.push_back(read_string(reader));
                break;
            case 3:
                node.name = read_string(reader);
                break;
            case 4:
                node.op_type = read_string(reader);
                break;
            case 5: {
                const auto [p, n] = reader.bytes();
                node.attribute.push_back(parse_attribute(p, n));
                break;
            }
            default:
                reader.skip(type);
        }
    }
    return node;
}

GraphProto parse_graph(const std::uint8_t* data, std::size_t size) {
    GraphProto graph;
    WireReader reader(data, size);
    int field;
    WireType type;
    while (reader.next(field, type)) {
        switch (field) {
            case 1: {
                const auto [p, n] = reader.bytes();
                graph.node.push_back(parse_node(p, n));
                break;
            }
            case 2:
                graph.name = read_string(reader);
                break;
            case 5: {
                const auto [p, n] = reader.bytes();
                graph.initializer.push_back(parse_tensor(p, n));
                break;
            }
            case 11: {
                const auto [p, n] = reader.bytes();
                graph.input.push_back(parse_value_info(p, n));
                break;
            }
            case 12: {
                const auto [p, n] = reader.bytes();
                graph.output.push_back(parse_value_info(p, n));
                break;
            }
            default:
                reader.skip(type);
        }
    }
    return graph;
}

GraphProto parse_model(const std::vector<std::uint8_t>& bytes) {
    WireReader reader(bytes.data(), bytes.size());
    int field;
    WireType type;
    std::optional<GraphProto> graph;
    while (reader.next(field, type)) {
        if (field == 7 && type == kLengthDelimited) {
            const auto [p, n] = reader.bytes();
            graph = parse_graph(p, n);
        } else {
            reader.skip(type);
        }
    }
    if (!graph) throw InvalidModelError("ONNX model has no graph");
    return std::move(*graph);
}

// ---------------------------------------------------------------------------
// Import: walk the node chain, folding the supported operators into layers.
// ---------------------------------------------------------------------------

struct ImageShape {
    int channels;
    int height;
    int width;
};

struct ImportState {
    std::map<std::string, TensorProto> initializers;
    std::string current;                  // name of the tensor flowing forward
    std::optional<ImageShape> geometry;   // known when the tensor is an image
    int flat_size = 0;
    std::vector<Layer> layers;
};

const AttributeProto* find_attr(const NodeProto& node, const std::string& name) {
    for (const AttributeProto& attr : node.attribute)
        if (attr.name == name) return &attr;
    return nullptr;
}

Eigen::MatrixXd tensor_as_matrix(const TensorProto& tensor) {
    if (tensor.dims.size() != 2)
        throw UnsupportedModelError("tensor '" + tensor.name + "' is not 2-dimensional");
    const auto values = tensor.as_doubles();
    const int rows = static_cast<int>(tensor.dims[0]);
    const int cols = static_cast<int>(tensor.dims[1]);
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(r) * cols + c];
    return m;
}

Eigen::VectorXd tensor_as_vector(const TensorProto& tensor) {
    const auto values = tensor.as_doubles();
    return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                             static_cast<Eigen::Index>(values.size()));
}

const TensorProto& require_initializer(const ImportState& state, const std::string& name,
                                       const std::string& context) {
    const auto it = state.initializers.find(name);
    if (it == state.initializers.end())
        throw InvalidModelError(context + " expects initializer '" + name + "'");
    return it->second;
}

// The value-info shape of the single graph input, normalized to a flat size
// plus optional image geometry. A leading batch dimension of 1 (or a symbolic
// one) is dropped.
void init_input_shape(ImportState& state, const ValueInfoProto& info) {
    std::vector<std::int64_t> dims = info.shape;
    if (dims.size() > 1 && (dims[0] == 1 || dims[0] == -1)) dims.erase(dims.begin());
    if (dims.empty()) throw InvalidModelError("graph input has no shape");
    for (std::int64_t d : dims)
        if (d < 1) throw InvalidModelError("graph input shape has a non-positive dimension");

    if (dims.size() == 1) {
        state.flat_size = static_cast<int>(dims[0]);
        state.geometry = std::nullopt;
    } else if (dims.size() == 3) {
        state.geometry = ImageShape{static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                                    static_cast<int>(dims[2])};
        state.flat_size =
            state.geometry->channels * state.geometry->height * state.geometry->width;
    } else if (dims.size() == 2) {
        // (1, n) handled above; a genuine 2-D image gets one channel.
        state.geometry = ImageShape{1, static_cast<int>(dims[0]), static_cast<int>(dims[1])};
        state.flat_size = state.geometry->height * state.geometry->width;
    } else {
        throw UnsupportedModelError("graph input has unsupported rank " +
                                    std::to_string(dims.size()));
    }
}

void absorb_reshape(ImportState& state, const NodeProto& node) {
    if (node.op_type == "Flatten") {
        state.geometry = std::nullopt;
        return;
    }
    // Reshape: the target shape decides whether an image view is restored.
    if (node.input.size() < 2)
        throw InvalidModelError("Reshape node '" + node.name + "' has no shape input");
    const TensorProto& shape_tensor = require_initializer(state, node.input[1], "Reshape");
    std::vector<std::int64_t> dims = shape_tensor.as_int64s();
    if (dims.size() > 1 && (dims[0] == 1 || dims[0] == -1)) dims.erase(dims.begin());
    if (dims.size() == 3) {
        const ImageShape shape{static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                               static_cast<int>(dims[2])};
        if (shape.channels * shape.height * shape.width != state.flat_size)
            throw InvalidModelError("Reshape target does not preserve the element count");
        state.geometry = shape;
    } else {
        state.geometry = std::nullopt;
    }
}

// MatMul, optionally followed by Add. Returns the index of the next unread node.
std::size_t handle_matmul(ImportState& state, const std::vector<NodeProto>& nodes,
                          std::size_t index) {
    const NodeProto& node = nodes[index];
    FullyConnectedLayer fc;

    const bool weight_first = state.initializers.count(node.input[0]) > 0;
    const std::string& weight_name = weight_first ? node.input[0] : node.input[1];
    const std::string& data_name = weight_first ? node.input[1] : node.input[0];
    if (data_name != state.current)
        throw InvalidModelError("MatMul node '" + node.name + "' is not part of the chain");
    const Eigen::MatrixXd w = tensor_as_matrix(require_initializer(state, weight_name, "MatMul"));
    // x @ W multiplies from the right; W @ x from the left.
    fc.weights = weight_first ? w : Eigen::MatrixXd(w.transpose());
    fc.biases = Eigen::VectorXd::Zero(fc.weights.rows());
    state.current = node.output.at(0);

    if (index + 1 < nodes.size() && nodes[index + 1].op_type == "Add") {
        const NodeProto& add = nodes[index + 1];
        const bool bias_first = state.initializers.count(add.input[0]) > 0;
        const std::string& bias_name = bias_first ? add.input[0] : add.input.at(1);
        const std::string& add_data = bias_first ? add.input.at(1) : add.input[0];
        if (add_data == state.current) {
            fc.biases = tensor_as_vector(require_initializer(state, bias_name, "Add"));
            if (fc.biases.size() != fc.weights.rows())
                throw InvalidModelError("Add bias length does not match MatMul output");
            state.current = add.output.at(0);
            ++index;
        }
    }

    state.flat_size = fc.fan_out();
    state.geometry = std::nullopt;
    state.layers.emplace_back(std::move(fc));
    return index + 1;
}

void handle_gemm(ImportState& state, const NodeProto& node) {
    if (node.input.size() < 2)
        throw InvalidModelError("Gemm node '" + node.name + "' needs at least two inputs");
    if (node.input[0] != state.current)
        throw UnsupportedModelError("Gemm with a constant first operand is not supported");

    if (const AttributeProto* alpha = find_attr(node, "alpha"))
        if (alpha->has_f && alpha->f != 1.0f) throw UnsupportedModelError("Gemm alpha must be 1");
    if (const AttributeProto* beta = find_attr(node, "beta"))
        if (beta->has_f && beta->f != 1.0f) throw UnsupportedModelError("Gemm beta must be 1");
    if (const AttributeProto* trans_a = find_attr(node, "transA"))
        if (trans_a->i != 0) throw UnsupportedModelError("Gemm transA must be 0");
    const AttributeProto* trans_b = find_attr(node, "transB");
    const bool transpose_b = trans_b && trans_b->i != 0;

    FullyConnectedLayer fc;
    const Eigen::MatrixXd w =
        tensor_as_matrix(require_initializer(state, node.input[1], "Gemm"));
    // y = x @ B (transB=0) or y = x @ B^T (transB=1); rows of our weight
    // matrix index outputs.
    fc.weights = transpose_b ? w : Eigen::MatrixXd(w.transpose());
    if (node.input.size() >= 3 && !node.input[2].empty()) {
        fc.biases = tensor_as_vector(require_initializer(state, node.input[2], "Gemm"));
        if (fc.biases.size() != fc.weights.rows())
            throw InvalidModelError("Gemm bias length does not match output size");
    } else {
        fc.biases = Eigen::VectorXd::Zero(fc.weights.rows());
    }

    state.current = node.output.at(0);
    state.flat_size = fc.fan_out();
    state.geometry = std::nullopt;
    state.layers.emplace_back(std::move(fc));
}

void handle_conv(ImportState& state, const NodeProto& node) {
    if (!state.geometry)
        throw InvalidModelError("Conv node '" + node.name +
                                "' has no image-shaped input; a Reshape is required");
    const ImageShape shape = *state.geometry;

    const TensorProto& weight = require_initializer(state, node.input.at(1), "Conv");
    if (weight.dims.size() != 4)
        throw UnsupportedModelError("Conv weights must be a 4-D tensor");

    ConvolutionalLayer conv;
    conv.out_channels = static_cast<int>(weight.dims[0]);
    conv.in_channels = static_cast<int>(weight.dims[1]);
    conv.kernel_size = static_cast<int>(weight.dims[2]);
    if (weight.dims[2] != weight.dims[3])
        throw UnsupportedModelError("Conv kernels must be square");
    conv.kernel = weight.as_doubles();
    conv.height = shape.height;
    conv.width = shape.width;
    if (conv.in_channels != shape.channels)
        throw InvalidModelError("Conv input channels do not match the incoming tensor");

    if (const AttributeProto* kernel_shape = find_attr(node, "kernel_shape")) {
        for (std::int64_t k : kernel_shape->ints)
            if (k != conv.kernel_size)
                throw UnsupportedModelError("Conv kernel_shape must be square and match weights");
    }
    conv.stride = 1;
    if (const AttributeProto* strides = find_attr(node, "strides")) {
        if (strides->ints.empty()) throw InvalidModelError("Conv strides attribute is empty");
        conv.stride = static_cast<int>(strides->ints[0]);
        for (std::int64_t s : strides->ints)
            if (s != conv.stride) throw UnsupportedModelError("Conv strides must be symmetric");
    }
    conv.padding = 0;
    if (const AttributeProto* pads = find_attr(node, "pads")) {
        if (!pads->ints.empty()) {
            conv.padding = static_cast<int>(pads->ints[0]);
            for (std::int64_t p : pads->ints)
                if (p != conv.padding)
                    throw UnsupportedModelError("Conv padding must be symmetric");
        }
    }
    if (const AttributeProto* dilations = find_attr(node, "dilations")) {
        for (std::int64_t d : dilations->ints)
            if (d != 1) throw UnsupportedModelError("Conv dilations are not supported");
    }
    if (const AttributeProto* group = find_attr(node, "group")) {
        if (group->i != 0 && group->i != 1)
            throw UnsupportedModelError("grouped Conv is not supported");
    }

    if (node.input.size() >= 3 && !node.input[2].empty()) {
        conv.biases = tensor_as_vector(require_initializer(state, node.input[2], "Conv"));
    } else {
        conv.biases = Eigen::VectorXd::Zero(conv.out_channels);
    }
    conv.validate();

    state.current = node.output.at(0);
    state.geometry = ImageShape{conv.out_channels, conv.out_height(), conv.out_width()};
    state.flat_size = conv.fan_out();
    state.layers.emplace_back(std::move(conv));
}

void handle_relu(ImportState& state, const NodeProto& node) {
    if (state.layers.empty())
        throw InvalidModelError("Relu node '" + node.name + "' has no preceding layer");
    Layer& last = state.layers.back();
    if (layer_activation(last) != ActivationKind::None)
        throw InvalidModelError("layer already has an activation function");
    std::visit([](auto& layer) { layer.activation = ActivationKind::ReLU; }, last);
    state.current = node.output.at(0);
}

Network import_graph(const GraphProto& graph) {
    ImportState state;
    for (const TensorProto& tensor : graph.initializer)
        state.initializers[tensor.name] = tensor;

    // Old exporters list initializers among the graph inputs; the real input
    // is the one without backing data.
    const ValueInfoProto* graph_input = nullptr;
    for (const ValueInfoProto& info : graph.input) {
        if (state.initializers.count(info.name)) continue;
        if (graph_input) throw UnsupportedModelError("graph has more than one input");
        graph_input = &info;
    }
    if (!graph_input) throw InvalidModelError("graph has no input");
    if (graph.output.size() != 1) throw UnsupportedModelError("graph must have exactly one output");

    init_input_shape(state, *graph_input);
    state.current = graph_input->name;
    const int input_dim = state.flat_size;

    std::size_t index = 0;
    const std::vector<NodeProto>& nodes = graph.node;
    while (index < nodes.size()) {
        const NodeProto& node = nodes[index];
        if (node.input.empty() || node.output.empty())
            throw InvalidModelError("node '" + node.name + "' is not connected");

        // Every node must consume the tensor at the head of the chain.
        const bool consumes_current =
            std::find(node.input.begin(), node.input.end(), state.current) != node.input.end();
        if (!consumes_current)
            throw InvalidModelError("node '" + node.name + "' (" + node.op_type +
                                    ") does not consume the running tensor; "
                                    "the graph is not a single chain");

        if (node.op_type == "MatMul") {
            index = handle_matmul(state, nodes, index);
            continue;
        }
        if (node.op_type == "Gemm") {
            handle_gemm(state, node);
        } else if (node.op_type == "Conv") {
            handle_conv(state, node);
        } else if (node.op_type == "Relu") {
            handle_relu(state, node);
        } else if (node.op_type == "Flatten" || node.op_type == "Reshape") {
            absorb_reshape(state, node);
            state.current = node.output.at(0);
        } else {
            throw UnsupportedModelError("unsupported operator '" + node.op_type + "'");
        }
        ++index;
    }

    if (state.current != graph.output[0].name)
        throw InvalidModelError("node chain does not end at the graph output '" +
                                graph.output[0].name + "'");
    if (state.layers.empty()) throw InvalidModelError("model defines no layers");
    if (!std::holds_alternative<FullyConnectedLayer>(state.layers.back()) ||
        layer_activation(state.layers.back()) != ActivationKind::None)
        throw UnsupportedModelError(
            "model must end with a fully connected layer without activation");

    return Network(input_dim, std::move(state.layers));
}

// ---------------------------------------------------------------------------
// Export.
// ---------------------------------------------------------------------------

void write_double_tensor(WireWriter& out, int field, const std::string& name,
                         const std::vector<std::int64_t>& dims, const double* data,
                         std::size_t count) {
    WireWriter tensor;
    for (std::int64_t d : dims) tensor.int64_field(1, d);
    tensor.int64_field(2, kDataTypeDouble);
    tensor.string_field(8, name);
    tensor.string_field(9, std::string_view(reinterpret_cast<const char*>(data), count * 8));
    out.message_field(field, tensor);
}

void write_int64_tensor(WireWriter& out, int field, const std::string& name,
                        const std::vector<std::int64_t>& values) {
    WireWriter tensor;
    tensor.int64_field(1, static_cast<std::int64_t>(values.size()));
    tensor.int64_field(2, kDataTypeInt64);
    tensor.string_field(8, name);
    tensor.string_field(
        9, std::string_view(reinterpret_cast<const char*>(values.data()), values.size() * 8));
    out.message_field(field, tensor);
}

void write_value_info(WireWriter& out, int field, const std::string& name,
                      const std::vector<std::int64_t>& shape) {
    WireWriter shape_proto;
    for (std::int64_t d : shape) {
        WireWriter dim;
        dim.int64_field(1, d);
        shape_proto.message_field(1, dim);
    }
    WireWriter tensor_type;
    tensor_type.int64_field(1, kDataTypeDouble);
    tensor_type.message_field(2, shape_proto);
    WireWriter type_proto;
    type_proto.message_field(1, tensor_type);
    WireWriter info;
    info.string_field(1, name);
    info.message_field(2, type_proto);
    out.message_field(field, info);
}

void write_int_attribute(WireWriter& node, const std::string& name, std::int64_t value) {
    WireWriter attr;
    attr.string_field(1, name);
    attr.int64_field(3, value);
    attr.int64_field(20, 2);  // AttributeType INT
    node.message_field(5, attr);
}

void write_ints_attribute(WireWriter& node, const std::string& name,
                          const std::vector<std::int64_t>& values) {
    WireWriter attr;
    attr.string_field(1, name);
    for (std::int64_t v : values) attr.int64_field(8, v);
    attr.int64_field(20, 7);  // AttributeType INTS
    node.message_field(5, attr);
}

void write_float_attribute(WireWriter& node, const std::string& name, float value) {
    WireWriter attr;
    attr.string_field(1, name);
    attr.float_field(2, value);
    attr.int64_field(20, 1);  // AttributeType FLOAT
    node.message_field(5, attr);
}

struct NodeBuilder {
    WireWriter node;

    NodeBuilder(const std::string& op_type, const std::string& name,
                const std::vector<std::string>& inputs, const std::string& output) {
        for (const std::string& in : inputs) node.string_field(1, in);
        node.string_field(2, output);
        node.string_field(3, name);
        node.string_field(4, op_type);
    }
};

}  // namespace

Network import_onnx(const std::vector<std::uint8_t>& bytes) {
    return import_graph(parse_model(bytes));
}

std::vector<std::uint8_t> export_onnx(const Network& network) {
    int name_counter = 0;
    const auto fresh = [&](const std::string& prefix) {
        return prefix + std::to_string(name_counter++);
    };

    const bool starts_with_conv =
        std::holds_alternative<ConvolutionalLayer>(network.layers().front());

    std::string current = "X";
    bool current_is_image = starts_with_conv;

    std::vector<WireWriter> nodes;
    WireWriter initializers;

    const auto add_node = [&](NodeBuilder builder) { nodes.push_back(std::move(builder.node)); };

    for (int t = 1; t <= network.num_layers(); ++t) {
        const Layer& layer = network.layers()[t - 1];
        const bool is_output_layer = t == network.num_layers();

        if (const auto* fc = std::get_if<FullyConnectedLayer>(&layer)) {
            if (current_is_image) {
                const std::string flattened = fresh("flat");
                NodeBuilder flatten("Flatten", fresh("node"), {current}, flattened);
                write_int_attribute(flatten.node, "axis", 1);
                add_node(std::move(flatten));
                current = flattened;
                current_is_image = false;
            }
            const std::string weight_name = fresh("W");
            const std::string bias_name = fresh("B");
            std::vector<double> weights(static_cast<std::size_t>(fc->weights.size()));
            for (int r = 0; r < fc->weights.rows(); ++r)
                for (int c = 0; c < fc->weights.cols(); ++c)
                    weights[static_cast<std::size_t>(r) * fc->weights.cols() + c] =
                        fc->weights(r, c);
            write_double_tensor(initializers, 5, weight_name,
                                {fc->weights.rows(), fc->weights.cols()}, weights.data(),
                                weights.size());
            write_double_tensor(initializers, 5, bias_name, {fc->biases.size()},
                                fc->biases.data(), static_cast<std::size_t>(fc->biases.size()));

            const std::string out_name = is_output_layer && fc->activation == ActivationKind::None
                                             ? "Y"
                                             : fresh("t");
            NodeBuilder gemm("Gemm", fresh("node"), {current, weight_name, bias_name}, out_name);
            write_float_attribute(gemm.node, "alpha", 1.0f);
            write_float_attribute(gemm.node, "beta", 1.0f);
            write_int_attribute(gemm.node, "transA", 0);
            write_int_attribute(gemm.node, "transB", 1);
            add_node(std::move(gemm));
            current = out_name;
        } else {
            const auto& conv = std::get<ConvolutionalLayer>(layer);
            if (!current_is_image) {
                const std::string shape_name = fresh("shape");
                write_int64_tensor(initializers, 5, shape_name,
                                   {1, conv.in_channels, conv.height, conv.width});
                const std::string reshaped = fresh("img");
                add_node(NodeBuilder("Reshape", fresh("node"), {current, shape_name}, reshaped));
                current = reshaped;
                current_is_image = true;
            }
            const std::string weight_name = fresh("convW");
            const std::string bias_name = fresh("convB");
            write_double_tensor(initializers, 5, weight_name,
                                {conv.out_channels, conv.in_channels, conv.kernel_size,
                                 conv.kernel_size},
                                conv.kernel.data(), conv.kernel.size());
            write_double_tensor(initializers, 5, bias_name, {conv.biases.size()},
                                conv.biases.data(),
                                static_cast<std::size_t>(conv.biases.size()));

            const std::string out_name = fresh("t");
            NodeBuilder conv_node("Conv", fresh("node"), {current, weight_name, bias_name},
                                  out_name);
            write_ints_attribute(conv_node.node, "kernel_shape",
                                 {conv.kernel_size, conv.kernel_size});
            write_ints_attribute(conv_node.node, "strides", {conv.stride, conv.stride});
            write_ints_attribute(conv_node.node, "pads",
                                 {conv.padding, conv.padding, conv.padding, conv.padding});
            write_ints_attribute(conv_node.node, "dilations", {1, 1});
            write_int_attribute(conv_node.node, "group", 1);
            add_node(std::move(conv_node));
            current = out_name;
        }

        if (layer_activation(layer) == ActivationKind::ReLU) {
            const std::string out_name = fresh("t");
            add_node(NodeBuilder("Relu", fresh("node"), {current}, out_name));
            current = out_name;
        }
    }

    WireWriter graph;
    for (const WireWriter& node : nodes) graph.message_field(1, node);
    graph.string_field(2, "network");
    graph.raw_append(initializers);  // tensors were framed as field 5 already

    std::vector<std::int64_t> input_shape;
    if (starts_with_conv) {
        const auto& conv = std::get<ConvolutionalLayer>(network.layers().front());
        input_shape = {1, conv.in_channels, conv.height, conv.width};
    } else {
        input_shape = {1, network.input_dim()};
    }
    write_value_info(graph, 11, "X", input_shape);
    write_value_info(graph, 12, "Y", {1, network.output_dim()});

    WireWriter model;
    model.int64_field(1, 8);  // ir_version
    model.string_field(2, "vqdd");
    model.message_field(7, graph);

    WireWriter opset;
    opset.string_field(1, "");
    opset.int64_field(2, 13);
    model.message_field(8, opset);

    const std::string& bytes = model.buffer();
    return std::vector<std::uint8_t>(bytes.begin(), bytes.end());
}

Network load_onnx(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open '" + file.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return import_onnx(bytes);
}

void save_onnx(const Network& network, const std::filesystem::path& file) {
    const std::vector<std::uint8_t> bytes = export_onnx(network);
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInputError("cannot write '" + file.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

}  // namespace vqdd

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "vqdd/query.hpp"

namespace vqdd {

/// A verification query plus free-form provenance metadata. This is the
/// engine's checkpoint format; the ONNX + VNN-LIB pair is the verifier-facing
/// format.
struct QueryDocument {
    VerificationQuery query;
    std::map<std::string, std::string> metadata;
};

/// Serializes with a fixed field order and 17-significant-digit decimals, so
/// output is deterministic and the round trip is lossless.
std::string write_query_json(const QueryDocument& doc);
void write_query(const QueryDocument& doc, const std::filesystem::path& file);

/// `base_dir` resolves relative `network_path` / `property_path` references.
QueryDocument parse_query_json(const std::string& text, const std::filesystem::path& base_dir);
QueryDocument read_query(const std::filesystem::path& file);

}  // namespace vqdd

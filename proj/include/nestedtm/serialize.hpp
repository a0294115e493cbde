// Copyright 2026 The nestedtm Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string_view>

#include <json.hpp>

#include "nestedtm/evaluation.hpp"
#include "nestedtm/matrix.hpp"
#include "nestedtm/model.hpp"
#include "nestedtm/sampler.hpp"
#include "nestedtm/simulate.hpp"

namespace nestedtm {

using Json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every file we write is an object tagged with "format", "kind" and
/// "version"; readers reject anything else.
inline constexpr int kFormatVersion = 1;

template <typename T>
void to_json(Json& j, const Matrix<T>& m) {
  j = Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

template <typename T>
void from_json(const Json& j, Matrix<T>& m) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  auto data = j.at("data").get<std::vector<T>>();
  if (data.size() != rows * cols) throw FormatError("matrix data has the wrong length");
  m = Matrix<T>(rows, cols);
  m.data() = std::move(data);
}

void to_json(Json& j, const ModelSpec& spec);
void from_json(const Json& j, ModelSpec& spec);
void to_json(Json& j, const ChainConfig& config);
void from_json(const Json& j, ChainConfig& config);
void to_json(Json& j, const PosteriorSummary& summary);
void from_json(const Json& j, PosteriorSummary& summary);
void to_json(Json& j, const ModelState& state);
void from_json(const Json& j, ModelState& state);
void to_json(Json& j, const ChainSnapshot& snapshot);
void from_json(const Json& j, ChainSnapshot& snapshot);
void to_json(Json& j, const SimulationScale& scale);
void from_json(const Json& j, SimulationScale& scale);
void to_json(Json& j, const SyntheticTruth& truth);
void from_json(const Json& j, SyntheticTruth& truth);
void to_json(Json& j, const CvResult& result);
void from_json(const Json& j, CvResult& result);

/// Wraps `body` with the format tags for `kind`.
Json make_document(std::string_view kind, Json body);
/// Returns the body of a document of the expected kind. Throws FormatError.
const Json& document_body(const Json& doc, std::string_view kind);

/// JSON with a trailing newline; compact unless `indent` >= 0.
void write_json_file(const std::filesystem::path& path, const Json& j,
                     int indent = -1);
Json read_json_file(const std::filesystem::path& path);

void save_summary(const std::filesystem::path& path, const PosteriorSummary& s);
PosteriorSummary load_summary(const std::filesystem::path& path);
void save_snapshot(const std::filesystem::path& path, const ChainSnapshot& s);
ChainSnapshot load_snapshot(const std::filesystem::path& path);
void save_truth(const std::filesystem::path& path, const SyntheticTruth& t);
SyntheticTruth load_truth(const std::filesystem::path& path);

}  // namespace nestedtm

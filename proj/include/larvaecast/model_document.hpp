#pragma once

// Portable text format for trained models and fitted transforms.
//
//   larvaecast-model 1
//   schema dense
//   dropout_rate 0.2
//   layer_dims 6 64 1
//   ...
//   end
//
// One field per line: a name followed by whitespace-separated tokens.
// Tensors are written as `<name> <index...> <rows> <cols> <row-major values>`
// in shortest round-trip decimal form, so reading back is bit-exact. A file
// may hold several documents back to back.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "larvaecast/dense_network.hpp"
#include "larvaecast/forecast_engine.hpp"
#include "larvaecast/lstm.hpp"
#include "larvaecast/preprocess.hpp"
#include "larvaecast/trend_models.hpp"

namespace larvaecast {

inline constexpr std::string_view kDocumentMagic = "larvaecast-model";
inline constexpr int kDocumentVersion = 1;

struct DocumentField {
  std::size_t line = 0;
  std::string name;
  std::string text;  // everything after the name, trimmed
  std::vector<std::string> tokens;
};

class ModelDocument {
public:
  explicit ModelDocument(std::string schema, std::string source = "<memory>", std::size_t line = 0);

  const std::string& schema() const { return schema_; }
  const std::string& source() const { return source_; }
  const std::vector<DocumentField>& fields() const { return fields_; }

  void add(std::string name, std::string text, std::size_t line = 0);
  void add_number(std::string name, double value);
  void add_numbers(std::string name, std::span<const double> values);
  /// Adds `<name> <index> <rows> <cols> <values...>` (index omitted if < 0).
  void add_tensor(std::string name, long index, const Eigen::MatrixXd& tensor);

  const DocumentField& get(std::string_view name) const;
  std::vector<const DocumentField*> all(std::string_view name) const;
  bool has(std::string_view name) const;

  double number(std::string_view name) const;
  long long integer(std::string_view name) const;
  std::vector<double> numbers(std::string_view name) const;
  std::vector<long long> integers(std::string_view name) const;

  /// Reads a tensor field whose declared shape must equal rows x cols.
  Eigen::MatrixXd tensor(const DocumentField& field, bool indexed, Eigen::Index rows, Eigen::Index cols) const;

  /// Throws ParseError naming the document and the problem.
  [[noreturn]] void fail(const std::string& message) const;
  [[noreturn]] void fail(const DocumentField& field, const std::string& message) const;

  void require_schema(std::string_view schema) const;

private:
  std::string schema_;
  std::string source_;
  std::size_t line_;
  std::vector<DocumentField> fields_;
};

std::string write_documents(std::span<const ModelDocument> docs);
std::vector<ModelDocument> parse_documents(std::string_view text, const std::string& source = "<memory>");

void save_documents(const std::filesystem::path& path, std::span<const ModelDocument> docs);
std::vector<ModelDocument> load_documents(const std::filesystem::path& path);

// Codecs. Every decoder validates shapes against the declared metadata.
ModelDocument to_document(const nn::DenseNetworkd& net);
nn::DenseNetworkd dense_from_document(const ModelDocument& doc);

ModelDocument to_document(const nn::LstmForecaster& forecaster);
nn::LstmForecaster lstm_from_document(const ModelDocument& doc);

ModelDocument to_document(const TrendParams& params);
TrendParams trend_from_document(const ModelDocument& doc);

ModelDocument to_document(const LinearModel& model);
LinearModel linear_from_document(const ModelDocument& doc);

ModelDocument to_document(const std::string& region_id, const OffsetK& k);
std::pair<std::string, OffsetK> offsets_from_document(const ModelDocument& doc);

ModelDocument to_document(const FeatureScaler& scaler, const LogCountTransform& log_transform);
std::pair<FeatureScaler, LogCountTransform> feature_scaler_from_document(const ModelDocument& doc);

}  // namespace larvaecast

#include "larvaecast/model_document.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "larvaecast/csv.hpp"
#include "larvaecast/error.hpp"

namespace larvaecast {

namespace {

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ' && text[i] != '\t') ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view token, double& out) {
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return !token.empty() && ec == std::errc() && ptr == token.data() + token.size();
}

bool parse_long(std::string_view token, long long& out) {
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return !token.empty() && ec == std::errc() && ptr == token.data() + token.size();
}

nn::Activation parse_activation(const ModelDocument& doc, const DocumentField& f, const std::string& token) {
  if (token == "relu") return nn::Activation::kRelu;
  if (token == "identity") return nn::Activation::kIdentity;
  doc.fail(f, "unknown activation '" + token + "'");
}

}  // namespace

ModelDocument::ModelDocument(std::string schema, std::string source, std::size_t line)
    : schema_(std::move(schema)), source_(std::move(source)), line_(line) {}

void ModelDocument::add(std::string name, std::string text, std::size_t line) {
  DocumentField f;
  f.line = line;
  f.name = std::move(name);
  f.tokens = split_tokens(text);
  f.text = std::move(text);
  fields_.push_back(std::move(f));
}

void ModelDocument::add_number(std::string name, double value) { add(std::move(name), csv::format_number(value)); }

void ModelDocument::add_numbers(std::string name, std::span<const double> values) {
  std::string text;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text.push_back(' ');
    text += csv::format_number(values[i]);
  }
  add(std::move(name), std::move(text));
}

void ModelDocument::add_tensor(std::string name, long index, const Eigen::MatrixXd& tensor) {
  std::string text;
  if (index >= 0) text = std::to_string(index) + " ";
  text += std::to_string(tensor.rows()) + " " + std::to_string(tensor.cols());
  for (Eigen::Index r = 0; r < tensor.rows(); ++r)
    for (Eigen::Index c = 0; c < tensor.cols(); ++c) text += " " + csv::format_number(tensor(r, c));
  add(std::move(name), std::move(text));
}

void ModelDocument::fail(const std::string& message) const {
  throw ParseError(source_ + ":" + std::to_string(line_) + " document '" + schema_ + "': " + message);
}

void ModelDocument::fail(const DocumentField& field, const std::string& message) const {
  throw ParseError(source_ + ":" + std::to_string(field.line) + " field '" + field.name + "': " + message);
}

void ModelDocument::require_schema(std::string_view schema) const {
  if (schema_ != schema) fail("expected schema '" + std::string(schema) + "'");
}

const DocumentField& ModelDocument::get(std::string_view name) const {
  const DocumentField* found = nullptr;
  for (const auto& f : fields_) {
    if (f.name != name) continue;
    if (found) fail(f, "field appears more than once");
    found = &f;
  }
  if (!found) fail("missing field '" + std::string(name) + "'");
  return *found;
}

std::vector<const DocumentField*> ModelDocument::all(std::string_view name) const {
  std::vector<const DocumentField*> out;
  for (const auto& f : fields_)
    if (f.name == name) out.push_back(&f);
  return out;
}

bool ModelDocument::has(std::string_view name) const {
  for (const auto& f : fields_)
    if (f.name == name) return true;
  return false;
}

double ModelDocument::number(std::string_view name) const {
  const auto& f = get(name);
  if (f.tokens.size() != 1) fail(f, "expected exactly one number");
  double v = 0.0;
  if (!parse_double(f.tokens[0], v)) fail(f, "not a number: '" + f.tokens[0] + "'");
  return v;
}

long long ModelDocument::integer(std::string_view name) const {
  const auto& f = get(name);
  if (f.tokens.size() != 1) fail(f, "expected exactly one integer");
  long long v = 0;
  if (!parse_long(f.tokens[0], v)) fail(f, "not an integer: '" + f.tokens[0] + "'");
  return v;
}

std::vector<double> ModelDocument::numbers(std::string_view name) const {
  const auto& f = get(name);
  std::vector<double> out(f.tokens.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!parse_double(f.tokens[i], out[i])) fail(f, "value " + std::to_string(i) + " is not a number");
  return out;
}

std::vector<long long> ModelDocument::integers(std::string_view name) const {
  const auto& f = get(name);
  std::vector<long long> out(f.tokens.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!parse_long(f.tokens[i], out[i])) fail(f, "value " + std::to_string(i) + " is not an integer");
  return out;
}

Eigen::MatrixXd ModelDocument::tensor(const DocumentField& f, bool indexed, Eigen::Index rows,
                                      Eigen::Index cols) const {
  const std::size_t head = indexed ? 3 : 2;
  if (f.tokens.size() < head) fail(f, "truncated tensor header");
  long long declared_rows = 0, declared_cols = 0;
  if (!parse_long(f.tokens[head - 2], declared_rows) || !parse_long(f.tokens[head - 1], declared_cols))
    fail(f, "tensor shape is not numeric");
  if (declared_rows != rows || declared_cols != cols)
    fail(f, "tensor shape " + std::to_string(declared_rows) + "x" + std::to_string(declared_cols) +
                " does not match expected " + std::to_string(rows) + "x" + std::to_string(cols));
  const auto expected = static_cast<std::size_t>(rows * cols);
  if (f.tokens.size() - head != expected)
    fail(f, "expected " + std::to_string(expected) + " values, found " + std::to_string(f.tokens.size() - head));
  Eigen::MatrixXd out(rows, cols);
  std::size_t k = head;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c, ++k) {
      double v = 0.0;
      if (!parse_double(f.tokens[k], v)) fail(f, "value " + std::to_string(k - head) + " is not a number");
      out(r, c) = v;
    }
  return out;
}

std::string write_documents(std::span<const ModelDocument> docs) {
  std::string out;
  for (const auto& doc : docs) {
    out += std::string(kDocumentMagic) + " " + std::to_string(kDocumentVersion) + "\n";
    out += "schema " + doc.schema() + "\n";
    for (const auto& f : doc.fields()) {
      out += f.name;
      if (!f.text.empty()) out += " " + f.text;
      out += "\n";
    }
    out += "end\n";
  }
  return out;
}

std::vector<ModelDocument> parse_documents(std::string_view text, const std::string& source) {
  std::vector<ModelDocument> docs;
  std::optional<ModelDocument> current;
  bool expect_schema = false;
  std::size_t header_line = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto fail = [&](const std::string& message) {
    throw ParseError(source + ":" + std::to_string(line_no) + ": " + message);
  };
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto space = line.find_first_of(" \t");
    const auto name = line.substr(0, space);
    const auto rest = space == std::string_view::npos ? std::string_view{} : trim(line.substr(space));

    if (!current && !expect_schema) {
      if (name != kDocumentMagic) fail("expected '" + std::string(kDocumentMagic) + "' header");
      long long version = 0;
      if (!parse_long(rest, version)) fail("missing schema version");
      if (version != kDocumentVersion) fail("unsupported document version " + std::to_string(version));
      expect_schema = true;
      header_line = line_no;
      continue;
    }
    if (expect_schema) {
      if (name != "schema" || rest.empty()) fail("expected 'schema <name>'");
      current.emplace(std::string(rest), source, header_line);
      expect_schema = false;
      continue;
    }
    if (name == "end") {
      docs.push_back(std::move(*current));
      current.reset();
      continue;
    }
    current->add(std::string(name), std::string(rest), line_no);
  }
  if (current || expect_schema) throw ParseError(source + ":" + std::to_string(line_no) + ": truncated document, missing 'end'");
  if (docs.empty()) throw ParseError(source + ": no model documents found");
  return docs;
}

void save_documents(const std::filesystem::path& path, std::span<const ModelDocument> docs) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << write_documents(docs);
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<ModelDocument> load_documents(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_documents(buffer.str(), path.string());
}

// --- dense ---------------------------------------------------------------

ModelDocument to_document(const nn::DenseNetworkd& net) {
  net.validate();
  ModelDocument doc("dense");
  doc.add_number("dropout_rate", net.dropout_rate);
  std::string dims, acts;
  for (std::size_t i = 0; i < net.layer_dims.size(); ++i) dims += (i ? " " : "") + std::to_string(net.layer_dims[i]);
  for (std::size_t i = 0; i < net.activations.size(); ++i) acts += std::string(i ? " " : "") + nn::to_string(net.activations[i]);
  doc.add("layer_dims", dims);
  doc.add("activations", acts);
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    doc.add_tensor("weights", static_cast<long>(i), net.params.weights[i]);
    doc.add_tensor("bias", static_cast<long>(i), net.params.biases[i]);
  }
  return doc;
}

nn::DenseNetworkd dense_from_document(const ModelDocument& doc) {
  doc.require_schema("dense");
  nn::DenseNetworkd net;
  net.dropout_rate = doc.number("dropout_rate");
  if (!(net.dropout_rate >= 0.0 && net.dropout_rate < 1.0)) doc.fail(doc.get("dropout_rate"), "must lie in [0, 1)");
  for (auto d : doc.integers("layer_dims")) {
    if (d < 1) doc.fail(doc.get("layer_dims"), "dimensions must be positive");
    net.layer_dims.push_back(static_cast<Eigen::Index>(d));
  }
  if (net.layer_dims.size() < 2) doc.fail(doc.get("layer_dims"), "need at least two dimensions");
  const std::size_t layers = net.layer_dims.size() - 1;
  const auto& acts = doc.get("activations");
  if (acts.tokens.size() != layers)
    doc.fail(acts, "expected " + std::to_string(layers) + " activations, found " + std::to_string(acts.tokens.size()));
  for (const auto& t : acts.tokens) net.activations.push_back(parse_activation(doc, acts, t));

  const auto weights = doc.all("weights");
  const auto biases = doc.all("bias");
  if (weights.size() != layers || biases.size() != layers)
    doc.fail("expected " + std::to_string(layers) + " weight and bias tensors, found " + std::to_string(weights.size()) +
             " and " + std::to_string(biases.size()));
  net.params.weights.resize(layers);
  net.params.biases.resize(layers);
  std::vector<bool> seen_w(layers), seen_b(layers);
  auto index_of = [&](const DocumentField* f, std::vector<bool>& seen) {
    long long idx = -1;
    if (f->tokens.empty() || !parse_long(f->tokens[0], idx) || idx < 0 || static_cast<std::size_t>(idx) >= layers)
      doc.fail(*f, "invalid layer index");
    if (seen[static_cast<std::size_t>(idx)]) doc.fail(*f, "duplicate layer index");
    seen[static_cast<std::size_t>(idx)] = true;
    return static_cast<std::size_t>(idx);
  };
  for (const auto* f : weights) {
    const auto i = index_of(f, seen_w);
    net.params.weights[i] = doc.tensor(*f, true, net.layer_dims[i + 1], net.layer_dims[i]);
  }
  for (const auto* f : biases) {
    const auto i = index_of(f, seen_b);
    net.params.biases[i] = doc.tensor(*f, true, net.layer_dims[i + 1], 1);
  }
  net.validate();
  return net;
}

// --- lstm ----------------------------------------------------------------

namespace {
constexpr std::array<std::string_view, nn::kGateCount> kGateNames = {"input", "forget", "output", "candidate"};
}

ModelDocument to_document(const nn::LstmForecaster& f) {
  const auto& m = f.model;
  m.validate();
  ModelDocument doc("lstm");
  doc.add("hidden_size", std::to_string(m.hidden_size));
  doc.add("input_size", std::to_string(m.input_size));
  doc.add("output_len", std::to_string(m.output_len));
  doc.add_number("input_dropout_rate", m.input_dropout_rate);
  doc.add("lookback", std::to_string(f.windows.lookback));
  doc.add("horizon", std::to_string(f.windows.horizon));
  for (std::size_t k = 0; k < nn::kGateCount; ++k) {
    const std::string gate(kGateNames[k]);
    doc.add_tensor("W_" + gate, -1, m.params.input_weights[k]);
    doc.add_tensor("U_" + gate, -1, m.params.recurrent_weights[k]);
    doc.add_tensor("b_" + gate, -1, m.params.gate_biases[k]);
  }
  doc.add_tensor("head_weights", -1, m.params.head_weights);
  doc.add_tensor("head_bias", -1, m.params.head_bias);
  return doc;
}

nn::LstmForecaster lstm_from_document(const ModelDocument& doc) {
  doc.require_schema("lstm");
  nn::LstmForecaster f;
  auto& m = f.model;
  auto positive = [&](std::string_view name) {
    const auto v = doc.integer(name);
    if (v < 1) doc.fail(doc.get(name), "must be positive");
    return v;
  };
  m.hidden_size = static_cast<Eigen::Index>(positive("hidden_size"));
  m.input_size = static_cast<Eigen::Index>(positive("input_size"));
  m.output_len = static_cast<Eigen::Index>(positive("output_len"));
  m.input_dropout_rate = doc.number("input_dropout_rate");
  f.windows.lookback = static_cast<std::size_t>(positive("lookback"));
  f.windows.horizon = static_cast<std::size_t>(positive("horizon"));
  if (static_cast<Eigen::Index>(f.windows.horizon) != m.output_len)
    doc.fail(doc.get("horizon"), "horizon must equal output_len");
  for (std::size_t k = 0; k < nn::kGateCount; ++k) {
    const std::string gate(kGateNames[k]);
    m.params.input_weights[k] = doc.tensor(doc.get("W_" + gate), false, m.hidden_size, m.input_size);
    m.params.recurrent_weights[k] = doc.tensor(doc.get("U_" + gate), false, m.hidden_size, m.hidden_size);
    m.params.gate_biases[k] = doc.tensor(doc.get("b_" + gate), false, m.hidden_size, 1);
  }
  m.params.head_weights = doc.tensor(doc.get("head_weights"), false, m.output_len, m.hidden_size);
  m.params.head_bias = doc.tensor(doc.get("head_bias"), false, m.output_len, 1);
  m.validate();
  f.windows.validate();
  return f;
}

// --- small models ----------------------------------------------------------

ModelDocument to_document(const TrendParams& p) {
  ModelDocument doc("trend");
  doc.add_number("lambda", p.lambda);
  doc.add_number("alpha", p.alpha);
  doc.add_number("theta", p.theta);
  doc.add_number("gamma", p.gamma);
  doc.add_number("beta", p.beta);
  doc.add_number("phi", p.phi);
  return doc;
}

TrendParams trend_from_document(const ModelDocument& doc) {
  doc.require_schema("trend");
  return {doc.number("lambda"), doc.number("alpha"), doc.number("theta"),
          doc.number("gamma"),  doc.number("beta"),  doc.number("phi")};
}

ModelDocument to_document(const LinearModel& model) {
  ModelDocument doc("linear");
  doc.add_number("slope", model.slope);
  doc.add_number("intercept", model.intercept);
  return doc;
}

LinearModel linear_from_document(const ModelDocument& doc) {
  doc.require_schema("linear");
  return {doc.number("slope"), doc.number("intercept")};
}

ModelDocument to_document(const std::string& region_id, const OffsetK& k) {
  ModelDocument doc("offsets");
  doc.add("region_id", region_id);
  doc.add_number("k_min", k.k_min);
  doc.add_number("k_max", k.k_max);
  return doc;
}

std::pair<std::string, OffsetK> offsets_from_document(const ModelDocument& doc) {
  doc.require_schema("offsets");
  const auto& region = doc.get("region_id");
  if (region.text.empty()) doc.fail(region, "empty region id");
  return {region.text, OffsetK{doc.number("k_min"), doc.number("k_max")}};
}

ModelDocument to_document(const FeatureScaler& scaler, const LogCountTransform& log_transform) {
  ModelDocument doc("feature-scaler");
  std::vector<double> means, stds;
  for (const auto& c : scaler.columns) {
    means.push_back(c.mean);
    stds.push_back(c.std);
  }
  doc.add("fit_rows", std::to_string(scaler.fit_rows));
  doc.add_numbers("mean", means);
  doc.add_numbers("std", stds);
  doc.add_number("log_offset", log_transform.offset);
  return doc;
}

std::pair<FeatureScaler, LogCountTransform> feature_scaler_from_document(const ModelDocument& doc) {
  doc.require_schema("feature-scaler");
  FeatureScaler scaler;
  const auto rows = doc.integer("fit_rows");
  if (rows < 1) doc.fail(doc.get("fit_rows"), "must be positive");
  scaler.fit_rows = static_cast<std::size_t>(rows);
  const auto means = doc.numbers("mean");
  const auto stds = doc.numbers("std");
  if (means.empty() || means.size() != stds.size()) doc.fail(doc.get("std"), "mean and std lengths differ");
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (!(stds[i] > 0.0)) doc.fail(doc.get("std"), "standard deviations must be positive");
    scaler.columns.push_back({means[i], stds[i]});
  }
  LogCountTransform log_transform{doc.number("log_offset")};
  if (!(log_transform.offset >= 0.0)) doc.fail(doc.get("log_offset"), "must be non-negative");
  return {scaler, log_transform};
}

}  // namespace larvaecast

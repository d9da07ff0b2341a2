#include "vfocus/predictor.hpp"

#include <json.hpp>

#include "vfocus/errors.hpp"

namespace vfocus {

Label::Label(std::string value) : value_(std::move(value)) {
  if (value_.empty()) throw InvalidInput("labels must be non-empty");
}

std::vector<Label> Predictor::predict_batch(std::span<const Query> queries) {
  if (queries.empty()) throw InvalidInput("predict_batch called with no queries");
  std::vector<Label> out;
  out.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    try {
      out.push_back(predict(queries[i]));
    } catch (const PredictorError& e) {
      throw PredictorError(e.kind(), e.what(), i);
    }
  }
  return out;
}

SyntheticLogicModel::SyntheticLogicModel(LogicExpr formula, Label target, Label other)
    : formula_(std::move(formula)), target_(std::move(target)), other_(std::move(other)) {
  if (target_ == other_) throw InvalidInput("synthetic model labels must differ");
}

Label SyntheticLogicModel::predict(const Query& query) {
  if (!query.state) throw InvalidInput("synthetic model needs the query state");
  return eval(formula_, *query.state) ? target_ : other_;
}

PixelProbingLogicModel::PixelProbingLogicModel(RgbImage original, RegionPartition partition,
                                               LogicExpr formula, Label target, Label other)
    : original_(std::move(original)),
      partition_(std::move(partition)),
      formula_(std::move(formula)),
      target_(std::move(target)),
      other_(std::move(other)) {
  if (target_ == other_) throw InvalidInput("synthetic model labels must differ");
  if (original_.width() != partition_.width() || original_.height() != partition_.height())
    throw InvalidInput("image and partition dimensions differ");
  if (formula_.max_region() > partition_.region_count())
    throw InvalidInput("formula references a region the partition does not have");
}

StateVector PixelProbingLogicModel::decode(const RgbImage& composed) const {
  if (composed.width() != original_.width() || composed.height() != original_.height())
    throw InvalidInput("composed image has the wrong size");
  const std::size_t m = partition_.region_count();
  StateVector present = StateVector::all(m);
  const auto labels = partition_.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint32_t l = labels[i];
    if (l != 0 && composed.at(i) != original_.at(i)) present.set(l, false);
  }
  return present;
}

Label PixelProbingLogicModel::predict(const Query& query) {
  if (!query.image) throw InvalidInput("pixel-probing model needs the composed image");
  return eval(formula_, decode(*query.image)) ? target_ : other_;
}

std::size_t CachingPredictor::KeyHash::operator()(const Key& k) const noexcept {
  const std::size_t a = std::hash<std::string>{}(k.image_id);
  const std::size_t b = std::hash<StateVector>{}(k.state);
  return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
}

Label CachingPredictor::predict(const Query& query) {
  return predict_batch(std::span<const Query>(&query, 1)).front();
}

std::vector<Label> CachingPredictor::predict_batch(std::span<const Query> queries) {
  if (queries.empty()) throw InvalidInput("predict_batch called with no queries");
  for (const auto& q : queries)
    if (!q.state) throw InvalidInput("cached queries need a state key");

  std::vector<Label> out(queries.size());
  std::vector<std::size_t> missing;
  {
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      auto it = entries_.find(Key{std::string(queries[i].image_id), *queries[i].state});
      if (it != entries_.end()) {
        out[i] = it->second;
        ++hits_;
      } else {
        missing.push_back(i);
      }
    }
    misses_ += missing.size();
  }
  if (missing.empty()) return out;

  std::vector<Query> forwarded;
  forwarded.reserve(missing.size());
  for (std::size_t i : missing) forwarded.push_back(queries[i]);
  std::vector<Label> fresh;
  try {
    fresh = inner_.predict_batch(forwarded);
  } catch (const PredictorError& e) {
    const auto index = e.batch_index() ? std::optional(missing[*e.batch_index()]) : std::nullopt;
    throw PredictorError(e.kind(), e.what(), index);
  }

  std::lock_guard lock(mutex_);
  for (std::size_t j = 0; j < missing.size(); ++j) {
    const std::size_t i = missing[j];
    auto [it, inserted] =
        entries_.try_emplace(Key{std::string(queries[i].image_id), *queries[i].state}, fresh[j]);
    out[i] = it->second;
  }
  return out;
}

std::size_t CachingPredictor::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t CachingPredictor::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

std::size_t CachingPredictor::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::string encode_request(std::string_view id, const RgbImage& image) {
  nlohmann::json j;
  j["id"] = std::string(id);
  j["image_png_b64"] = base64_encode(encode_rgb_png(image));
  return j.dump();
}

Response decode_response(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw PredictorError(PredictorFailure::Malformed, std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
    throw PredictorError(PredictorFailure::Malformed, "response lacks a string id");
  Response r;
  r.id = j["id"].get<std::string>();
  if (j.contains("error")) {
    r.error = j["error"].is_string() ? j["error"].get<std::string>() : j["error"].dump();
    if (r.error.empty()) r.error = "unspecified model error";
    return r;
  }
  if (!j.contains("label") || !j["label"].is_string() || j["label"].get<std::string>().empty())
    throw PredictorError(PredictorFailure::Malformed, "response " + r.id + " lacks a label");
  r.label = j["label"].get<std::string>();
  return r;
}

std::unique_ptr<Predictor> connect_model(std::string_view endpoint, RemoteOptions options) {
  if (endpoint.starts_with("exec:")) {
    std::vector<std::string> argv;
    std::string_view rest = endpoint.substr(5);
    while (!rest.empty()) {
      const auto start = rest.find_first_not_of(' ');
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      const auto end = rest.find(' ');
      argv.emplace_back(rest.substr(0, end));
      rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
    }
    if (argv.empty()) throw InvalidInput("exec: model needs a program path");
    return std::make_unique<StdioPredictor>(std::move(argv), options);
  }
  if (endpoint.starts_with("http:")) {
    std::string url(endpoint);
    if (!endpoint.starts_with("http://")) url = std::string(endpoint.substr(5));
    if (!url.starts_with("http://")) url = "http://" + url;
    return std::make_unique<HttpPredictor>(std::move(url), options);
  }
  throw InvalidInput("model must be exec:<path> or http:<url>, got '" + std::string(endpoint) + "'");
}

}  // namespace vfocus

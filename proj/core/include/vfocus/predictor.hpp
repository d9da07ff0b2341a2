#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vfocus/image.hpp"
#include "vfocus/logic.hpp"
#include "vfocus/regions.hpp"
#include "vfocus/state.hpp"

namespace vfocus {

/// Hard class label returned by a model. Never empty.
class Label {
 public:
  Label() = default;
  explicit Label(std::string value);

  const std::string& value() const noexcept { return value_; }

  friend bool operator==(const Label&, const Label&) = default;
  friend auto operator<=>(const Label&, const Label&) = default;

 private:
  std::string value_;
};

/// One model query. `image` is the composed raster I[v]; it is null when the predictor
/// declared `needs_pixels() == false`.
struct Query {
  std::string_view image_id;
  const StateVector* state = nullptr;
  const RgbImage* image = nullptr;
};

/// Black-box classifier f(.). Implementations must tolerate concurrent calls.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual Label predict(const Query& query) = 0;

  /// Positionally aligned with `queries`. The default maps predict(); on failure the thrown
  /// PredictorError carries the failing index. Throws InvalidInput for an empty batch.
  virtual std::vector<Label> predict_batch(std::span<const Query> queries);

  virtual bool needs_pixels() const { return true; }
  virtual bool deterministic() const { return true; }
};

/// Test model that reads the state directly: target label iff the preserved set satisfies
/// the formula.
class SyntheticLogicModel : public Predictor {
 public:
  SyntheticLogicModel(LogicExpr formula, Label target = Label("target"),
                      Label other = Label("other"));

  Label predict(const Query& query) override;
  bool needs_pixels() const override { return false; }

  const LogicExpr& formula() const noexcept { return formula_; }

 private:
  LogicExpr formula_;
  Label target_;
  Label other_;
};

/// Same decision rule, but region presence is decoded from the composed pixels: a region is
/// present when every one of its pixels still matches the original image.
class PixelProbingLogicModel : public Predictor {
 public:
  PixelProbingLogicModel(RgbImage original, RegionPartition partition, LogicExpr formula,
                         Label target = Label("target"), Label other = Label("other"));

  Label predict(const Query& query) override;

  /// Region presence as seen in `composed`.
  StateVector decode(const RgbImage& composed) const;

 private:
  RgbImage original_;
  RegionPartition partition_;
  LogicExpr formula_;
  Label target_;
  Label other_;
};

/// Memoizes labels by (image id, state). The first label stored for a key is kept, which also
/// freezes answers of non-deterministic models for the lifetime of the cache.
class CachingPredictor : public Predictor {
 public:
  explicit CachingPredictor(Predictor& inner) : inner_(inner) {}

  Label predict(const Query& query) override;
  std::vector<Label> predict_batch(std::span<const Query> queries) override;
  bool needs_pixels() const override { return inner_.needs_pixels(); }
  bool deterministic() const override { return inner_.deterministic(); }

  std::size_t hits() const;
  std::size_t misses() const;
  std::size_t size() const;

 private:
  struct Key {
    std::string image_id;
    StateVector state;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };

  Predictor& inner_;
  mutable std::mutex mutex_;
  std::unordered_map<Key, Label, KeyHash> entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

struct RemoteOptions {
  std::size_t max_in_flight = 8;
  std::chrono::milliseconds timeout{30'000};
  bool deterministic = true;
};

/// Speaks newline-delimited JSON with a child process over its stdin/stdout.
///
/// Request  `{"id":"<id>","image_png_b64":"<base64 PNG>"}`
/// Response `{"id":"<id>","label":"<label>"}` or `{"id":"<id>","error":"<message>"}`
/// Responses may arrive in any order and are matched by id. Batches are serialized on the
/// pipe; at most `max_in_flight` requests are outstanding.
class StdioPredictor : public Predictor {
 public:
  explicit StdioPredictor(std::vector<std::string> argv, RemoteOptions options = {});
  ~StdioPredictor() override;

  StdioPredictor(const StdioPredictor&) = delete;
  StdioPredictor& operator=(const StdioPredictor&) = delete;

  Label predict(const Query& query) override;
  std::vector<Label> predict_batch(std::span<const Query> queries) override;
  bool deterministic() const override { return options_.deterministic; }

 private:
  struct Process;

  RemoteOptions options_;
  std::unique_ptr<Process> process_;
  std::mutex mutex_;
  std::size_t next_id_ = 0;
};

/// Same message bodies, one HTTP POST per image. Batches fan out over up to
/// `max_in_flight` connections.
class HttpPredictor : public Predictor {
 public:
  explicit HttpPredictor(std::string url, RemoteOptions options = {});

  Label predict(const Query& query) override;
  std::vector<Label> predict_batch(std::span<const Query> queries) override;
  bool deterministic() const override { return options_.deterministic; }

 private:
  Label post(const Query& query, std::size_t sequence) const;

  std::string origin_;  // scheme://host:port
  std::string path_;
  RemoteOptions options_;
};

/// Builds a remote predictor from `exec:<program> [args...]` or `http:<url>`.
/// Throws InvalidInput for any other scheme.
std::unique_ptr<Predictor> connect_model(std::string_view endpoint, RemoteOptions options = {});

/// Wire-format helpers shared by both transports.
std::string encode_request(std::string_view id, const RgbImage& image);

struct Response {
  std::string id;
  std::string label;  // empty when error is set
  std::string error;
};
/// Throws PredictorError(Malformed) when the line is not a valid response.
Response decode_response(std::string_view line);

}  // namespace vfocus

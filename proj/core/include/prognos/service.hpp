#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prognos/model_io.hpp"

namespace prognos {

struct FieldError {
  std::string field;
  std::string message;
};

/// A validated prediction request. Absent horizons default to 1..12 and absent endpoints to
/// every loaded endpoint.
struct PredictRequest {
  Participant subject;
  bool has_grades = false;
  std::vector<int> horizons;
  std::vector<Endpoint> endpoints;
};

struct ParsedRequest {
  std::optional<PredictRequest> request;
  std::vector<FieldError> errors;
};

/// Schema validation of a JSON request body:
///   {"age": 73, "smoking": "current",
///    "grades": {"left": {"drusen": "large", "pigment": "present"}, "right": {...}},
///    "deep_features": [512 numbers], "genotype": {"cfh": "CC", "arms2": "TT", "grs": 0.4},
///    "horizons": [1, 5], "endpoints": ["late_amd", "ga", "nv"]}
ParsedRequest parse_predict_request(std::string_view body);

/// Covariates the loaded models need that the request cannot supply.
std::vector<FieldError> check_compatibility(const ModelSet& models, const PredictRequest& request);

/// Response body: {"predictions": {"late_amd": [{"horizon": 1, "probability": 0.012345,
/// "extrapolated": false}, ...]}, "sss": {"score": 4, "five_year_risk": 0.5}}. Probabilities are
/// rounded to 6 fractional digits; "sss" appears only when grades were given.
std::string prediction_response(const ModelSet& models, const PredictRequest& request);

/// Probability as written on the wire.
double wire_probability(double probability);

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Stateless request handlers over an immutable, atomically swappable model set.
class PredictionService {
 public:
  PredictionService() = default;
  explicit PredictionService(ModelSet models);

  void reload(ModelSet models);
  void unload();
  bool loaded() const;

  HttpResponse health() const;
  HttpResponse model_info() const;
  HttpResponse predict(std::string_view body) const;

 private:
  std::shared_ptr<const ModelSet> snapshot() const;

  mutable std::mutex mutex_;
  std::shared_ptr<const ModelSet> models_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  /// 0 binds an ephemeral port.
  int port = 8080;
  /// Directory served under /ui/ when nonempty.
  std::string ui_dir;
};

/// HTTP/1.1 front end: GET /v1/health, GET /v1/model, POST /v1/predict.
class HttpServer {
 public:
  HttpServer(PredictionService& service, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket; returns the bound port. Throws Io on failure.
  int bind();
  /// Serves until stop() is called. bind() must have succeeded.
  void listen();
  /// Blocks until a concurrent listen() accepts connections.
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace prognos

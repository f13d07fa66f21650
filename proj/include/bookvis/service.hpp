#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "bookvis/error.hpp"

namespace bookvis {

struct ServiceConfig {
  std::filesystem::path data_dir = "data";
  std::filesystem::path catalog_path;
  std::optional<std::filesystem::path> index_path;   // recognition answers 503 without one
  std::optional<std::filesystem::path> covers_dir;   // defaults to the catalog's directory
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";
  std::size_t max_upload_bytes = 10u << 20;
};

/// Fills unset fields from BOOKVIS_DATA_DIR, BOOKVIS_INDEX, BOOKVIS_CATALOG and BOOKVIS_PORT.
ServiceConfig config_from_env(ServiceConfig base = {});

int http_status(ErrorCode code) noexcept;
nlohmann::json api_error(int status, std::string_view code, std::string_view message);

/// OpenAPI 3 description of every route, served at /api/spec.
nlohmann::json openapi_document();

class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds (port 0 picks a free port) and returns the bound port.
  int bind();
  /// Serves until stop(); call after bind().
  void run();
  void stop();

  /// Re-reads catalog and index, then swaps them in for subsequent requests.
  void reload();

  const ServiceConfig& config() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace bookvis

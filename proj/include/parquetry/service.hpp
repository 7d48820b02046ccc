#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "parquetry/config.hpp"

namespace parquetry {

// Local HTTP front end for the interactive morphing loop.
//
//   POST /session                       {target: base64 image, config?: {key: value}}
//   GET  /session/{id}                  status
//   PUT  /session/{id}/masks            {m_rg, m_bilateral: base64 PNG} -> {grid_version}
//   GET  /session/{id}/masks            current masks
//   GET  /session/{id}/grid?version=v   grid JSON (202 while relaxing, 404 when stale)
//   POST /session/{id}/preview          {version?} -> draft PNG
//
// Sessions are snapshotted under <project>/sessions/<id> and rehydrated on start.
class Service {
public:
    Service(std::filesystem::path project, Config config);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds (port 0 picks a free one) and serves on a background thread.
    // Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    // Binds and serves on the calling thread until stop().
    bool listen(const std::string& host, int port);
    void stop();
    int session_count() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace parquetry

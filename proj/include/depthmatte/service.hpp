#pragma once

// Live tuning service: HTTP routes plus a WebSocket per browser session. Each
// session owns its pipeline worker; the socket side only validates control
// messages and forwards frames, dropping a frame whenever the previous one
// is still being written so nothing queues without bound.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "depthmatte/io.hpp"
#include "depthmatte/params.hpp"
#include "depthmatte/refine.hpp"
#include "depthmatte/stream.hpp"

namespace depthmatte {

namespace service_detail {
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = boost::beast::http;
namespace websocket = boost::beast::websocket;
using tcp = boost::asio::ip::tcp;
}  // namespace service_detail

enum class FrameFormat { png, jpeg };

struct ServiceConfig {
  std::string host = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks an ephemeral port
  /// Called once per session; every session gets its own source instance.
  std::function<std::unique_ptr<FrameSource>()> make_source;
  MatteParams initial_params;
  int output_width = 0;  // 0: derived from the source
  int output_height = 0;
  bool realtime = true;  // 60 Hz pacing; otherwise as fast as the client drains
  FrameFormat default_format = FrameFormat::jpeg;
  int jpeg_quality = 85;
  std::filesystem::path static_dir;  // UI bundle; empty disables static hosting
};

/// "host:port", ":port" or "port".
inline std::pair<std::string, unsigned short> parse_bind(const std::string& bind) {
  std::string host = "127.0.0.1";
  std::string port = bind;
  if (const auto colon = bind.rfind(':'); colon != std::string::npos) {
    if (colon > 0) host = bind.substr(0, colon);
    port = bind.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    const int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range(port);
    return {host, static_cast<unsigned short>(p)};
  } catch (const std::exception&) {
    throw ValidationError("bind", "expected host:port, got '" + bind + "'");
  }
}

inline const char* kernel_band_label(int k) {
  switch (k) {
    case 3: return "3x3";
    case 5: return "5x5";
    case 7: return "7x7";
    case 9: return "9x9";
    default: return "off";
  }
}

/// 8-byte little-endian header: frame_index then params hash, each u32.
inline std::vector<std::uint8_t> frame_header(std::uint64_t frame_index, std::uint32_t hash) {
  std::vector<std::uint8_t> out(8);
  const auto idx = static_cast<std::uint32_t>(frame_index);
  for (int i = 0; i < 4; ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(idx >> (8 * i));
    out[static_cast<std::size_t>(4 + i)] = static_cast<std::uint8_t>(hash >> (8 * i));
  }
  return out;
}

inline std::pair<std::uint32_t, std::uint32_t> parse_frame_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw Error(Errc::decode_failure, "frame message shorter than its header");
  std::uint32_t idx = 0;
  std::uint32_t hash = 0;
  for (int i = 0; i < 4; ++i) {
    idx |= std::uint32_t(bytes[static_cast<std::size_t>(i)]) << (8 * i);
    hash |= std::uint32_t(bytes[static_cast<std::size_t>(4 + i)]) << (8 * i);
  }
  return {idx, hash};
}

inline nlohmann::json params_ack_message(const MatteParams& p) {
  const int k = kernel_from_slider(p.kernel_slider);
  return {{"type", "params_ack"},
          {"hash", params_hash(p)},
          {"kernel", k},
          {"kernel_band", kernel_band_label(k)},
          {"params", to_json(p)}};
}

inline nlohmann::json error_message(const std::vector<FieldError>& fields) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& f : fields) list.push_back({{"field", f.field}, {"message", f.message}});
  return {{"type", "error"}, {"fields", list}};
}

inline nlohmann::json error_message(const std::string& field, const std::string& message) {
  return error_message(std::vector<FieldError>{{field, message}});
}

inline nlohmann::json timings_message(const FrameTimings& t, std::uint64_t dropped) {
  auto j = to_json(t);
  j["type"] = "timings";
  j["dropped"] = dropped;
  return j;
}

namespace service_detail {

inline std::string mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

inline std::pair<std::string, std::string> split_target(std::string_view target) {
  const auto q = target.find('?');
  if (q == std::string_view::npos) return {std::string(target), {}};
  return {std::string(target.substr(0, q)), std::string(target.substr(q + 1))};
}

inline std::optional<std::string> query_value(const std::string& query, const std::string& key) {
  std::size_t pos = 0;
  while (pos <= query.size()) {
    const auto amp = query.find('&', pos);
    const auto item = query.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
    const auto eq = item.find('=');
    if (item.substr(0, eq) == key) return eq == std::string::npos ? std::string{} : item.substr(eq + 1);
    if (amp == std::string::npos) break;
    pos = amp + 1;
  }
  return std::nullopt;
}

}  // namespace service_detail

/// Response for a plain HTTP request (anything but a WebSocket upgrade).
template <class Body, class Allocator>
service_detail::http::response<service_detail::http::string_body> handle_http_request(
    const service_detail::http::request<Body, service_detail::http::basic_fields<Allocator>>& req,
    const ServiceConfig& config, const std::vector<std::string>& backgrounds, const std::string& default_background) {
  namespace http = service_detail::http;
  auto reply = [&](http::status status, std::string content_type, std::string body) {
    http::response<http::string_body> res{status, req.version()};
    res.set(http::field::server, "depthmatte");
    res.set(http::field::content_type, content_type);
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  };
  if (req.method() != http::verb::get && req.method() != http::verb::head) {
    return reply(http::status::method_not_allowed, "application/json", R"({"error":"method not allowed"})");
  }
  const auto [path, query] = service_detail::split_target(std::string_view(req.target().data(), req.target().size()));
  if (path == "/healthz") return reply(http::status::ok, "application/json", R"({"status":"ok"})");
  if (path == "/backgrounds") {
    const nlohmann::json body{{"backgrounds", backgrounds}, {"default", default_background}};
    return reply(http::status::ok, "application/json", body.dump());
  }
  if (!config.static_dir.empty()) {
    std::string rel = path == "/" ? "index.html" : path.substr(1);
    const std::filesystem::path p(rel);
    bool safe = !p.is_absolute();
    for (const auto& part : p) safe = safe && part != "..";
    const auto full = config.static_dir / p;
    std::error_code ec;
    if (safe && std::filesystem::is_regular_file(full, ec)) {
      std::ifstream in(full, std::ios::binary);
      std::ostringstream body;
      body << in.rdbuf();
      return reply(http::status::ok, service_detail::mime_type(full), body.str());
    }
  }
  return reply(http::status::not_found, "application/json", R"({"error":"not found"})");
}

class TuningServer;

namespace service_detail {

/// One browser connection: a socket side running on the I/O thread and a
/// pipeline worker thread. The worker never owns the session, so the session
/// destructor (always on the I/O thread) can join it.
class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, const ServiceConfig& config)
      : ws_(std::move(socket)), config_(config), live_(config.initial_params) {}

  ~Session() {
    stop_worker();
  }

  template <class Body, class Allocator>
  void start(http::request<Body, http::basic_fields<Allocator>> req) {
    const auto [path, query] = split_target(std::string_view(req.target().data(), req.target().size()));
    format_ = config_.default_format;
    if (auto f = query_value(query, "format")) {
      if (*f == "png") format_ = FrameFormat::png;
      else if (*f == "jpeg" || *f == "jpg") format_ = FrameFormat::jpeg;
    }
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

  /// Joins the pipeline worker; used by the server after its I/O thread ended.
  void join_worker() { stop_worker(); }

  /// I/O thread only.
  void shutdown() {
    stop_worker_async();
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).close();
  }

 private:
  struct Outgoing {
    bool binary = false;
    bool frame = false;  // part of a frame pair (timings + image)
    std::string data;
  };

  void on_accept(beast::error_code ec) {
    if (ec) return;
    try {
      source_ = config_.make_source();
      background_ = source_->default_background();
      background_names_ = source_->background_names();
    } catch (const Error& e) {
      send_text(error_message("source", e.what()).dump());
      close_after_drain_ = true;
      return;
    }
    send_text(params_ack_message(live_.get()).dump());
    worker_ = std::thread([this, weak = weak_from_this()] { work(weak); });
    do_read();
  }

  void do_read() {
    ws_.async_read(read_buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      stop_worker_async();
      return;
    }
    const bool text = ws_.got_text();
    std::string message = beast::buffers_to_string(read_buffer_.data());
    read_buffer_.consume(read_buffer_.size());
    if (text) {
      handle_text(message);
    } else {
      send_text(error_message("message", "binary control messages are not supported").dump());
    }
    do_read();
  }

  void handle_text(const std::string& text) {
    const auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      send_text(error_message("message", "expected a JSON object").dump());
      return;
    }
    const auto type_it = j.find("type");
    if (type_it == j.end() || !type_it->is_string()) {
      send_text(error_message("type", "missing or not a string").dump());
      return;
    }
    const auto type = type_it->get<std::string>();
    if (type == "set_params") {
      const auto params = j.find("params");
      if (params == j.end()) {
        send_text(error_message("params", "missing").dump());
        return;
      }
      try {
        const MatteParams next = apply_update(live_.get(), *params);
        live_.set(next);
        send_text(params_ack_message(next).dump());
      } catch (const ValidationError& e) {
        send_text(error_message(e.fields()).dump());
      }
    } else if (type == "select_background") {
      const auto name = j.find("name");
      if (name == j.end() || !name->is_string() ||
          std::find(background_names_.begin(), background_names_.end(), name->get<std::string>()) ==
              background_names_.end()) {
        std::string allowed;
        for (const auto& n : background_names_) allowed += (allowed.empty() ? "" : "|") + n;
        send_text(error_message("name", "must be one of " + allowed).dump());
        return;
      }
      std::lock_guard lock(control_mutex_);
      background_ = name->get<std::string>();
    } else if (type == "pause" || type == "resume") {
      {
        std::lock_guard lock(control_mutex_);
        paused_ = type == "pause";
      }
      control_cv_.notify_all();
    } else {
      send_text(error_message("type", "unknown message type '" + type + "'").dump());
    }
  }

  void send_text(std::string text) { enqueue({false, false, std::move(text)}); }

  /// Drops the frame if the previous one has not been written yet.
  void offer_frame(std::string timings, std::string image) {
    if (frame_pending_) {
      ++dropped_;
      return;
    }
    {
      std::lock_guard lock(control_mutex_);
      frame_in_flight_ = true;
    }
    frame_pending_ = true;
    enqueue({false, true, std::move(timings)});
    enqueue({true, true, std::move(image)});
  }

  void enqueue(Outgoing msg) {
    queue_.push_back(std::move(msg));
    if (!writing_) write_next();
  }

  void write_next() {
    writing_ = true;
    ws_.binary(queue_.front().binary);
    ws_.async_write(asio::buffer(queue_.front().data),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_write(ec); });
  }

  void on_write(beast::error_code ec) {
    if (ec) {
      writing_ = false;
      stop_worker_async();
      return;
    }
    const Outgoing done = std::move(queue_.front());
    queue_.pop_front();
    if (done.frame && done.binary) {
      frame_pending_ = false;
      {
        std::lock_guard lock(control_mutex_);
        frame_in_flight_ = false;
      }
      control_cv_.notify_all();
    }
    if (!queue_.empty()) {
      write_next();
      return;
    }
    writing_ = false;
    if (close_after_drain_) {
      ws_.async_close(websocket::close_code::internal_error, [self = shared_from_this()](beast::error_code) {});
    }
  }

  // ---- worker thread -----------------------------------------------------

  void work(std::weak_ptr<Session> weak) {
    StreamOptions options;
    options.output_width = config_.output_width;
    options.output_height = config_.output_height;
    const FrameFormat format = format_;
    const int quality = config_.jpeg_quality;
    options.encoder = [format, quality](const ColorFrame& f) {
      return format == FrameFormat::png ? encode_png(f) : encode_jpeg(f, quality);
    };
    options.background_name = [this] {
      std::lock_guard lock(control_mutex_);
      return background_;
    };
    StreamRunner runner(*source_, options);
    const auto count = source_->color_frame_count();
    const auto period = std::chrono::nanoseconds(kFrameBudgetNs);
    auto start = std::chrono::steady_clock::now();
    std::uint64_t seq = 0;

    while (true) {
      {
        std::unique_lock lock(control_mutex_);
        if (paused_) {
          control_cv_.wait(lock, [&] { return stop_ || !paused_; });
          // Restart the pacing clock so a resume does not burst.
          start = std::chrono::steady_clock::now() - period * static_cast<std::int64_t>(seq);
        }
        if (stop_) return;
        if (config_.realtime) {
          const auto now = std::chrono::steady_clock::now();
          auto due = start + period * static_cast<std::int64_t>(seq);
          if (now > due + period) {
            // Fell behind: skip the missed ticks instead of catching up.
            seq = static_cast<std::uint64_t>((now - start) / period);
            due = start + period * static_cast<std::int64_t>(seq);
          }
          if (control_cv_.wait_until(lock, due, [&] { return stop_ || paused_; })) {
            if (stop_) return;
            continue;
          }
        }
      }

      const MatteParams params = live_.get();
      const std::uint64_t source_index = count && *count > 0 ? seq % *count : seq;
      std::string timings;
      std::string image;
      try {
        FrameTimings t = runner.run_frame(source_index, params);
        t.frame_index = seq;
        timings = timings_message(t, dropped_.load()).dump();
        const auto header = frame_header(seq, t.params_hash);
        const auto& body = runner.encoded();
        image.reserve(header.size() + body.size());
        image.append(header.begin(), header.end());
        image.append(body.begin(), body.end());
      } catch (const Error& e) {
        // A failing source closes this client only.
        const auto message = error_message("frame", e.what()).dump();
        asio::post(ws_.get_executor(), [weak, message] {
          if (auto self = weak.lock()) {
            self->send_text(message);
            self->close_after_drain_ = true;
          }
        });
        return;
      }
      if (!config_.realtime) {
        std::lock_guard lock(control_mutex_);
        frame_in_flight_ = true;  // cleared once the socket has written it
      }
      asio::post(ws_.get_executor(), [weak, timings = std::move(timings), image = std::move(image)]() mutable {
        if (auto self = weak.lock()) self->offer_frame(std::move(timings), std::move(image));
      });
      ++seq;
      if (!config_.realtime) {
        // Without pacing, wait for the socket to drain rather than render
        // frames that would only be dropped.
        std::unique_lock lock(control_mutex_);
        control_cv_.wait_for(lock, std::chrono::milliseconds(50), [&] { return stop_.load() || !frame_in_flight_; });
      }
    }
  }

  void stop_worker_async() {
    {
      std::lock_guard lock(control_mutex_);
      stop_ = true;
    }
    control_cv_.notify_all();
  }

  void stop_worker() {
    stop_worker_async();
    if (worker_.joinable()) worker_.join();
  }

  websocket::stream<beast::tcp_stream> ws_;
  const ServiceConfig& config_;
  beast::flat_buffer read_buffer_;
  FrameFormat format_ = FrameFormat::jpeg;

  // I/O-thread state
  std::deque<Outgoing> queue_;
  bool writing_ = false;
  bool frame_pending_ = false;
  bool close_after_drain_ = false;
  std::vector<std::string> background_names_;

  // Shared with the worker
  LiveParams live_;
  std::mutex control_mutex_;
  std::condition_variable control_cv_;
  std::string background_;
  bool paused_ = false;
  bool frame_in_flight_ = false;
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> dropped_{0};
  std::unique_ptr<FrameSource> source_;
  std::thread worker_;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, const ServiceConfig& config, std::function<void(std::shared_ptr<Session>)> adopt,
                 std::vector<std::string> backgrounds, std::string default_background)
      : stream_(std::move(socket)),
        config_(config),
        adopt_(std::move(adopt)),
        backgrounds_(std::move(backgrounds)),
        default_background_(std::move(default_background)) {}

  void run() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      stream_.expires_never();
      auto session = std::make_shared<Session>(stream_.release_socket(), config_);
      adopt_(session);
      session->start(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>(
        handle_http_request(req_, config_, backgrounds_, default_background_));
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (!ec && res->keep_alive()) {
        self->do_read();
      } else {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      }
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  const ServiceConfig& config_;
  std::function<void(std::shared_ptr<Session>)> adopt_;
  std::vector<std::string> backgrounds_;
  std::string default_background_;
};

}  // namespace service_detail

/// Owns the listening socket and one I/O thread; sessions run their own
/// pipeline workers.
class TuningServer {
 public:
  explicit TuningServer(ServiceConfig config) : config_(std::move(config)) {
    if (!config_.make_source) throw ValidationError("source", "no frame source configured");
  }

  TuningServer(const TuningServer&) = delete;
  TuningServer& operator=(const TuningServer&) = delete;

  ~TuningServer() { stop(); }

  /// Binds and starts serving on a background thread; returns the bound port.
  unsigned short start() {
    namespace asio = service_detail::asio;
    using service_detail::tcp;
    {
      // Validate the source once up front and cache the HTTP background list.
      auto probe = config_.make_source();
      backgrounds_ = probe->background_names();
      default_background_ = probe->default_background();
    }
    try {
      const tcp::endpoint endpoint(asio::ip::make_address(config_.host), config_.port);
      acceptor_.open(endpoint.protocol());
      acceptor_.set_option(asio::socket_base::reuse_address(true));
      acceptor_.bind(endpoint);
      acceptor_.listen(asio::socket_base::max_listen_connections);
    } catch (const boost::system::system_error& e) {
      throw Error(Errc::bind_failure, config_.host + ":" + std::to_string(config_.port) + ": " + e.what());
    }
    port_ = acceptor_.local_endpoint().port();
    do_accept();
    thread_ = std::thread([this] { ioc_.run(); });
    return port_;
  }

  /// Stops serving when SIGINT or SIGTERM arrives.
  void stop_on_signals() {
    signals_.add(SIGINT);
    signals_.add(SIGTERM);
    signals_.async_wait([this](const boost::system::error_code& ec, int) {
      if (!ec) shutdown_on_io();
    });
  }

  /// Blocks until the server has been stopped by stop() or a signal.
  void wait() {
    if (thread_.joinable()) thread_.join();
    for (auto& s : closing_) s->join_worker();
    closing_.clear();
  }

  void stop() {
    if (!thread_.joinable()) return;
    service_detail::asio::post(ioc_, [this] { shutdown_on_io(); });
    wait();
  }

  unsigned short port() const noexcept { return port_; }
  const ServiceConfig& config() const noexcept { return config_; }

 private:
  void shutdown_on_io() {
    boost::system::error_code ec;
    acceptor_.close(ec);
    signals_.cancel(ec);
    for (auto& weak : sessions_) {
      if (auto s = weak.lock()) {
        s->shutdown();
        closing_.push_back(std::move(s));
      }
    }
    sessions_.clear();
    // Idle keep-alive connections would otherwise hold the loop open.
    ioc_.stop();
  }

  void do_accept() {
    acceptor_.async_accept(service_detail::asio::make_strand(ioc_),
                           [this](boost::system::error_code ec, service_detail::tcp::socket socket) {
                             if (ec) return;  // acceptor closed
                             std::make_shared<service_detail::HttpConnection>(
                                 std::move(socket), config_,
                                 [this](std::shared_ptr<service_detail::Session> s) { adopt(std::move(s)); },
                                 backgrounds_, default_background_)
                                 ->run();
                             do_accept();
                           });
  }

  void adopt(std::shared_ptr<service_detail::Session> s) {
    std::erase_if(sessions_, [](const auto& w) { return w.expired(); });
    sessions_.push_back(s);
  }

  ServiceConfig config_;
  service_detail::asio::io_context ioc_{1};
  service_detail::tcp::acceptor acceptor_{ioc_};
  service_detail::asio::signal_set signals_{ioc_};
  std::vector<std::weak_ptr<service_detail::Session>> sessions_;
  std::vector<std::shared_ptr<service_detail::Session>> closing_;
  std::vector<std::string> backgrounds_;
  std::string default_background_;
  std::thread thread_;
  unsigned short port_ = 0;
};

}  // namespace depthmatte

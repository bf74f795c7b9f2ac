#include "mqtt/tcp.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <iostream>
#include <map>

#include "common/error.hpp"

namespace fieldcam::mqtt {
namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void net_fail(const std::string& what) {
  fail(ErrorCode::Network, what + ": " + std::strerror(errno));
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK); }

void send_all_blocking(int fd, ByteView data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      net_fail("send");
    }
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace

TcpBroker::TcpBroker(std::string bind_host, std::uint16_t port)
    : bind_host_(std::move(bind_host)), port_(port) {}

TcpBroker::~TcpBroker() { stop(); }

void TcpBroker::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) net_fail("socket");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port_);
  if (::inet_pton(AF_INET, bind_host_.c_str(), &addr.sin_addr) != 1)
    fail(ErrorCode::Network, "bad bind address " + bind_host_);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    const int err = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    errno = err;
    net_fail("bind " + bind_host_ + ":" + std::to_string(port_));
  }
  if (::listen(listen_fd_, 16) < 0) net_fail("listen");
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  set_nonblocking(listen_fd_);
  if (::pipe(wake_pipe_) < 0) net_fail("pipe");
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

void TcpBroker::stop() {
  if (!running_.exchange(false)) return;
  const char b = 'x';
  [[maybe_unused]] auto n = ::write(wake_pipe_[1], &b, 1);
  if (thread_.joinable()) thread_.join();
  ::close(listen_fd_);
  ::close(wake_pipe_[0]);
  ::close(wake_pipe_[1]);
  listen_fd_ = wake_pipe_[0] = wake_pipe_[1] = -1;
}

void TcpBroker::run() {
  struct Peer {
    int fd;
    Bytes rx;
    Bytes tx;
  };
  Broker broker;
  std::map<ConnectionId, Peer> peers;
  ConnectionId next_id = 1;
  const auto epoch = Clock::now();
  auto now = [&] { return std::chrono::duration_cast<SimTime>(Clock::now() - epoch); };

  auto drop_peer = [&](ConnectionId id) {
    auto it = peers.find(id);
    if (it == peers.end()) return;
    ::close(it->second.fd);
    peers.erase(it);
    broker.on_close(id);
  };

  auto apply = [&](const Broker::StepResult& r) {
    for (const auto& out : r.packets) {
      auto it = peers.find(out.to);
      if (it == peers.end()) continue;
      const Bytes wire = encode_packet(out.packet);
      it->second.tx.insert(it->second.tx.end(), wire.begin(), wire.end());
    }
    for (ConnectionId id : r.close) {
      auto it = peers.find(id);
      if (it == peers.end()) continue;
      // Best effort flush of a final CONNACK before closing.
      if (!it->second.tx.empty())
        ::send(it->second.fd, it->second.tx.data(), it->second.tx.size(), MSG_NOSIGNAL);
      ::close(it->second.fd);
      peers.erase(it);
    }
  };

  while (running_) {
    std::vector<pollfd> fds;
    std::vector<ConnectionId> ids;
    fds.push_back({wake_pipe_[0], POLLIN, 0});
    fds.push_back({listen_fd_, POLLIN, 0});
    for (auto& [id, p] : peers) {
      fds.push_back({p.fd, static_cast<short>(POLLIN | (p.tx.empty() ? 0 : POLLOUT)), 0});
      ids.push_back(id);
    }
    int timeout_ms = 100;
    if (auto d = broker.next_deadline()) {
      const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(*d - now()).count();
      timeout_ms = static_cast<int>(std::clamp<long long>(wait, 0, 100));
    }
    const int ready = ::poll(fds.data(), fds.size(), timeout_ms);
    if (ready < 0 && errno != EINTR) break;

    if (fds[1].revents & POLLIN) {
      for (;;) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;
        set_nonblocking(fd);
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        const ConnectionId id = next_id++;
        peers.emplace(id, Peer{fd, {}, {}});
        broker.on_open(id);
      }
    }

    for (std::size_t i = 0; i < ids.size(); ++i) {
      const ConnectionId id = ids[i];
      const short rev = fds[i + 2].revents;
      auto it = peers.find(id);
      if (it == peers.end()) continue;
      Peer& p = it->second;

      if (rev & POLLOUT && !p.tx.empty()) {
        const ssize_t n = ::send(p.fd, p.tx.data(), p.tx.size(), MSG_NOSIGNAL);
        if (n > 0) p.tx.erase(p.tx.begin(), p.tx.begin() + n);
        else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
          drop_peer(id);
          continue;
        }
      }
      if (rev & (POLLIN | POLLHUP | POLLERR)) {
        std::uint8_t buf[8192];
        const ssize_t n = ::recv(p.fd, buf, sizeof buf, 0);
        if (n == 0 || (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK)) {
          drop_peer(id);
          continue;
        }
        if (n > 0) p.rx.insert(p.rx.end(), buf, buf + n);
        try {
          while (peers.contains(id)) {
            Peer& cur = peers.at(id);
            const auto len = frame_length(cur.rx);
            if (!len) break;
            const ControlPacket packet = decode_packet(ByteView(cur.rx).first(*len));
            cur.rx.erase(cur.rx.begin(), cur.rx.begin() + static_cast<std::ptrdiff_t>(*len));
            apply(broker.on_packet(id, packet, now()));
          }
        } catch (const Error& e) {
          std::clog << "broker: dropping connection " << id << ": " << e.what() << '\n';
          drop_peer(id);
        }
      }
    }
    apply(broker.on_timer(now()));
  }

  for (auto& [id, p] : peers) ::close(p.fd);
}

TcpMqttClient::TcpMqttClient(std::string client_id) : session_(std::move(client_id)) {}

TcpMqttClient::~TcpMqttClient() { close_socket(); }

SimTime TcpMqttClient::now() const {
  return std::chrono::duration_cast<SimTime>(Clock::now() - epoch_);
}

void TcpMqttClient::close_socket() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  rx_.clear();
  session_.reset();
}

void TcpMqttClient::connect(const std::string& host, std::uint16_t port,
                            std::chrono::milliseconds timeout) {
  close_socket();
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
    fail(ErrorCode::Network, "cannot resolve " + host);
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    net_fail("socket");
  }
  if (::connect(fd, res->ai_addr, res->ai_addrlen) < 0) {
    const int err = errno;
    ::freeaddrinfo(res);
    ::close(fd);
    errno = err;
    net_fail("connect " + host + ":" + std::to_string(port));
  }
  ::freeaddrinfo(res);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  fd_ = fd;

  send_packet(session_.connect_packet());
  const auto deadline = Clock::now() + timeout;
  while (Clock::now() < deadline) {
    auto ev = poll(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()));
    if (ev.connack) {
      if (*ev.connack != 0) {
        close_socket();
        fail(ErrorCode::Network, "broker refused connection, code " + std::to_string(*ev.connack));
      }
      return;
    }
    if (fd_ < 0) break;
  }
  close_socket();
  fail(ErrorCode::Network, "no CONNACK from " + host);
}

void TcpMqttClient::send_packet(const ControlPacket& packet) {
  if (fd_ < 0) fail(ErrorCode::Network, "not connected");
  send_all_blocking(fd_, encode_packet(packet));
}

void TcpMqttClient::subscribe(std::string topic, QoS qos) {
  send_packet(session_.subscribe_packet(std::move(topic), qos));
}

void TcpMqttClient::publish(std::string topic, Bytes payload, QoS qos,
                            std::chrono::milliseconds timeout) {
  auto pub = session_.publish(std::move(topic), std::move(payload), qos, now());
  send_packet(pub.packet);
  if (qos == QoS::AtMostOnce) return;
  const auto deadline = Clock::now() + timeout;
  while (Clock::now() < deadline) {
    auto ev = poll(std::chrono::milliseconds(100));
    if (std::find(ev.completed.begin(), ev.completed.end(), pub.packet_id) != ev.completed.end())
      return;
    if (fd_ < 0) fail(ErrorCode::Network, "connection lost during publish");
  }
  fail(ErrorCode::Network, "publish handshake timed out");
}

bool TcpMqttClient::read_some(std::chrono::milliseconds timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  const int r = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (r <= 0) return false;
  std::uint8_t buf[8192];
  const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
  if (n <= 0) {
    close_socket();
    return false;
  }
  rx_.insert(rx_.end(), buf, buf + n);
  return true;
}

MqttClient::Events TcpMqttClient::drain(SimTime t) {
  MqttClient::Events all;
  while (fd_ >= 0) {
    const auto len = frame_length(rx_);
    if (!len) break;
    const ControlPacket packet = decode_packet(ByteView(rx_).first(*len));
    rx_.erase(rx_.begin(), rx_.begin() + static_cast<std::ptrdiff_t>(*len));
    auto ev = session_.on_packet(packet, t);
    for (const auto& p : ev.send) send_packet(p);
    if (ev.connack) all.connack = ev.connack;
    if (ev.suback) all.suback = ev.suback;
    for (auto& m : ev.messages) all.messages.push_back(std::move(m));
    for (auto id : ev.completed) all.completed.push_back(id);
  }
  return all;
}

MqttClient::Events TcpMqttClient::poll(std::chrono::milliseconds timeout) {
  if (fd_ < 0) return {};
  read_some(timeout);
  if (fd_ < 0) return {};
  auto ev = drain(now());
  for (const auto& p : session_.on_timer(now())) send_packet(p);
  return ev;
}

void TcpMqttClient::ping() {
  if (fd_ < 0) fail(ErrorCode::Network, "ping on a closed connection");
  send_packet(ControlPacket::simple(PacketType::Pingreq));
}

void TcpMqttClient::disconnect() {
  if (fd_ >= 0) {
    try {
      send_packet(ControlPacket::simple(PacketType::Disconnect));
    } catch (const Error&) {
    }
  }
  close_socket();
}

}  // namespace fieldcam::mqtt

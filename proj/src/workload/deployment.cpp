#include "okv/workload/deployment.hpp"

#include <stdexcept>

namespace okv {

Deployment::Deployment(DeploymentOptions opts) : opts_(std::move(opts)) {
  if (opts_.data_dir) std::filesystem::create_directories(*opts_.data_dir);
  if (opts_.remote) {
    base_ = std::make_unique<TcpTransport>(opts_.remote->host, opts_.remote->port);
  } else {
    server_ = std::make_unique<StorageServer>(opts_.data_dir ? std::optional(*opts_.data_dir / "server")
                                                             : std::nullopt);
    RequestHandler* handler = server_.get();
    if (opts_.attacks) {
      malicious_ = std::make_unique<MaliciousServer>(*server_, *opts_.attacks);
      handler = malicious_.get();
    }
    base_ = std::make_unique<InProcessTransport>(*handler);
  }
  Transport* inner = base_.get();
  if (opts_.latency.count() > 0) {
    latency_ = std::make_unique<LatencyTransport>(*inner, opts_.latency);
    inner = latency_.get();
  }
  tap_ = std::make_unique<ObservedTransport>(*inner, recorder_);
  if (opts_.data_dir) {
    counter_ = std::make_unique<FileCounter>(*opts_.data_dir / "counter");
  } else {
    counter_ = std::make_unique<MemoryCounter>();
  }
}

Deployment::~Deployment() = default;

Proxy& Deployment::restart(HookFn hook) {
  proxy_.reset();
  proxy_ = std::make_unique<Proxy>(opts_.proxy, opts_.keys, *tap_, *counter_);
  proxy_->set_clock([this](std::uint64_t e, std::uint32_t t) { recorder_.set_clock(e, t); });
  if (hook) proxy_->set_hook(std::move(hook));
  proxy_->open();
  return *proxy_;
}

Proxy& Deployment::proxy() {
  if (!proxy_) throw std::logic_error("no proxy running");
  return *proxy_;
}

}  // namespace okv

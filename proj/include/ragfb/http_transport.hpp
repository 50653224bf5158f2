#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ragfb {

struct HttpResponse {
    int status = 0;  // 0 means the request never completed (connect/timeout)
    std::string body;
};

using Header = std::pair<std::string, std::string>;

/// Minimal outbound-POST seam. Network clients depend on this so tests can
/// substitute scripted or counting transports.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post_json(const std::string& url, const std::string& body,
                                   const std::vector<Header>& headers) = 0;
};

/// Real transport backed by cpp-httplib. `timeout_secs` applies to connect,
/// read and write individually.
std::shared_ptr<HttpTransport> make_httplib_transport(int timeout_secs = 30);

/// Transport that answers from a user-supplied function. Invocations are
/// counted; tests use this both as a script and as a no-network tripwire.
class FunctionTransport : public HttpTransport {
public:
    using Handler = std::function<HttpResponse(const std::string& url, const std::string& body)>;

    explicit FunctionTransport(Handler handler) : handler_(std::move(handler)) {}

    HttpResponse post_json(const std::string& url, const std::string& body,
                           const std::vector<Header>&) override {
        ++calls_;
        return handler_(url, body);
    }

    int calls() const { return calls_; }

private:
    Handler handler_;
    int calls_ = 0;
};

/// Splits "http://host:port/path" into origin ("http://host:port") and path.
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace ragfb

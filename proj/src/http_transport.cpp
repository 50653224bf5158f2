#include "ragfb/http_transport.hpp"

#include <httplib.h>

namespace ragfb {

std::pair<std::string, std::string> split_url(const std::string& url) {
    std::size_t scheme = url.find("://");
    std::size_t path_start =
        (scheme == std::string::npos) ? url.find('/') : url.find('/', scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

namespace {

class HttplibTransport : public HttpTransport {
public:
    explicit HttplibTransport(int timeout_secs) : timeout_secs_(timeout_secs) {}

    HttpResponse post_json(const std::string& url, const std::string& body,
                           const std::vector<Header>& headers) override {
        auto [origin, path] = split_url(url);
        httplib::Client client(origin);
        client.set_connection_timeout(timeout_secs_, 0);
        client.set_read_timeout(timeout_secs_, 0);
        client.set_write_timeout(timeout_secs_, 0);
        httplib::Headers hdrs;
        for (const auto& [k, v] : headers) hdrs.emplace(k, v);
        auto res = client.Post(path, hdrs, body, "application/json");
        if (!res) return {0, ""};
        return {res->status, res->body};
    }

private:
    int timeout_secs_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_httplib_transport(int timeout_secs) {
    return std::make_shared<HttplibTransport>(timeout_secs);
}

}  // namespace ragfb

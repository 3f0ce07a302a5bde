#include "synthcxr/gen/http_provider.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include <cstdlib>

#include "synthcxr/core/base64.hpp"

namespace synthcxr::gen {

using nlohmann::json;

HttpGenerationProvider::HttpGenerationProvider(HttpProviderConfig config)
    : config_(std::move(config)) {}

std::vector<RawImage> HttpGenerationProvider::generate(const GenerationRequest& request) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(std::min(config_.timeout_s, 10), 0);
    client.set_read_timeout(config_.timeout_s, 0);

    httplib::Headers headers;
    if (const char* token = std::getenv(config_.token_env.c_str()); token && *token) {
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    const json body = {{"prompt", request.prompt},
                       {"count", request.count},
                       {"session_tag", request.session_tag}};
    auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res) {
        throw TransportError(strf("no response from ", config_.base_url, config_.path, " (",
                                  httplib::to_string(res.error()), ")"));
    }
    if (res->status >= 500) {
        throw TransportError(strf("server error ", res->status, " from provider"));
    }
    if (res->status != 200) {
        std::string message = res->body;
        try {
            const json err = json::parse(res->body);
            message = err.value("error", err.value("message", res->body));
        } catch (const json::exception&) {
            // plain-text body
        }
        throw ProviderRefusalError(strf("provider refused (status ", res->status, "): ", message));
    }

    json parsed;
    try {
        parsed = json::parse(res->body);
    } catch (const json::exception& e) {
        throw TransportError(strf("malformed provider response: ", e.what()));
    }

    // Decode as many images as are well-formed; a corrupt tail is a
    // transport failure that carries the intact prefix.
    std::vector<RawImage> images;
    if (!parsed.contains("images") || !parsed["images"].is_array()) {
        throw TransportError("provider response missing 'images' array");
    }
    for (const auto& item : parsed["images"]) {
        try {
            RawImage img;
            img.pixels = decode_raster(base64_decode(item.at("png_base64").get<std::string>()));
            if (item.contains("metadata")) {
                img.provider_metadata =
                    item["metadata"].is_string() ? item["metadata"].get<std::string>()
                                                 : item["metadata"].dump();
            }
            images.push_back(std::move(img));
        } catch (const std::exception& e) {
            throw TransportError(strf("undecodable image in provider response: ", e.what()),
                                 std::move(images));
        }
    }
    return images;
}

}  // namespace synthcxr::gen

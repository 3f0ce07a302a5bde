#pragma once

#include <string>

#include "synthcxr/gen/provider.hpp"

namespace synthcxr::gen {

struct HttpProviderConfig {
    std::string base_url = "http://localhost:8787";
    std::string path = "/v1/generate";
    /// Environment variable holding the auth token; never passed as a flag.
    std::string token_env = "SYNTHCXR_PROVIDER_TOKEN";
    int timeout_s = 300;
};

/// Remote generation client. POSTs {"prompt", "count", "session_tag"} as
/// JSON and expects {"images": [{"png_base64": ..., "metadata": ...}, ...]}.
/// Connection-level failures raise TransportError (retryable); HTTP 4xx
/// responses raise ProviderRefusalError with the server's message.
class HttpGenerationProvider : public GenerationProvider {
public:
    explicit HttpGenerationProvider(HttpProviderConfig config);

    std::vector<RawImage> generate(const GenerationRequest& request) override;
    std::string name() const override { return "remote"; }

private:
    HttpProviderConfig config_;
};

}  // namespace synthcxr::gen

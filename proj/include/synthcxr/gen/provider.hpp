#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "synthcxr/core/error.hpp"
#include "synthcxr/core/image.hpp"
#include "synthcxr/dataset/manifest.hpp"

namespace synthcxr::gen {

struct GenerationRequest {
    std::string prompt;
    int count = 1;
    dataset::ClassLabel target_class = dataset::ClassLabel::healthy;
    std::string session_tag;
};

/// Image as delivered by a provider, before any curation.
struct RawImage {
    Image pixels;
    std::string provider_metadata;  // free-form text (JSON for built-ins)
};

/// Connection-level failure; retryable. May carry images that were already
/// received before the failure.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& what, std::vector<RawImage> received = {})
        : Error(what), partial(std::move(received)) {}
    std::vector<RawImage> partial;
};

/// Well-formed rejection by the provider; not retryable.
class ProviderRefusalError : public Error {
public:
    explicit ProviderRefusalError(const std::string& what) : Error(what) {}
};

/// Raised when retries are exhausted; carries everything received so far.
class PartialResultError : public Error {
public:
    PartialResultError(const std::string& what, std::vector<RawImage> images)
        : Error(what), received(std::move(images)) {}
    std::vector<RawImage> received;
};

/// Text-to-image provider contract: request(prompt, count) -> images.
class GenerationProvider {
public:
    virtual ~GenerationProvider() = default;
    virtual std::vector<RawImage> generate(const GenerationRequest& request) = 0;
    virtual std::string name() const = 0;
};

/// Builds the generation prompt with the class slot resolved to "healthy" or
/// "pneumonia" and the count slot resolved to batch_size. Pure.
std::string build_prompt(dataset::ClassLabel target_class, int batch_size);

struct RetryPolicy {
    int max_attempts = 4;
    int base_delay_ms = 250;  // doubled per retry
};

/// Persistence hook invoked for every image as soon as it is received.
using RawSink = std::function<void(const RawImage&)>;

/// One logical batch request with bounded exponential backoff on transport
/// failures. Returns between 0 and request.count images (callers loop until
/// their quota is met); when retries are exhausted the error carries all
/// partial results, each already persisted through the sink.
std::vector<RawImage> request_batch(GenerationProvider& provider,
                                    const GenerationRequest& request,
                                    const RawSink& sink = nullptr,
                                    const RetryPolicy& policy = {});

}  // namespace synthcxr::gen

#include "synthcxr/gen/provider.hpp"

#include <chrono>
#include <thread>

namespace synthcxr::gen {

namespace {

// Count and class slots of the generation prompt template.
constexpr const char* kPromptTemplate =
    "Generate {count} Chest X-ray imaging data consisting of images representing different "
    "{class} patients, generated individually as separate downloadable files so I can download "
    "them one by one. The views you generate need to maintain a consistent format, meaning the "
    "overall image is portrait-oriented, and the images must show variations in gender, height, "
    "weight (fat and thin), and age, as well as human posture and body stance during imaging "
    "(such as some bodies or heads tilted left or right, rotation, arm orientation, etc.), "
    "along with differences in lung texture to ensure clinical authenticity and individual "
    "diversity. Note that each picture must be on a separate canvas, meaning you need to "
    "generate {count} images, all in portrait orientation with height greater than width, and "
    "the view focused on the thoracic cavity.";

std::string replace_all(std::string text, const std::string& slot, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(slot, pos)) != std::string::npos) {
        text.replace(pos, slot.size(), value);
        pos += value.size();
    }
    return text;
}

}  // namespace

std::string build_prompt(dataset::ClassLabel target_class, int batch_size) {
    if (batch_size < 1) fail("prompt batch size must be >= 1, got ", batch_size);
    std::string prompt = replace_all(kPromptTemplate, "{count}", std::to_string(batch_size));
    return replace_all(prompt, "{class}", dataset::to_string(target_class));
}

std::vector<RawImage> request_batch(GenerationProvider& provider,
                                    const GenerationRequest& request, const RawSink& sink,
                                    const RetryPolicy& policy) {
    if (request.count < 1) fail("request count must be >= 1, got ", request.count);
    if (request.prompt.empty()) fail("request prompt must not be empty");
    if (policy.max_attempts < 1) fail("retry policy needs at least one attempt");

    std::vector<RawImage> received;
    auto take = [&](std::vector<RawImage>&& images) {
        for (RawImage& img : images) {
            if (sink) sink(img);
            received.push_back(std::move(img));
        }
    };

    std::string last_error;
    for (int attempt = 0; attempt < policy.max_attempts; ++attempt) {
        if (attempt > 0) {
            const auto delay = std::chrono::milliseconds(
                static_cast<long>(policy.base_delay_ms) << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        GenerationRequest sub = request;
        sub.count = request.count - static_cast<int>(received.size());
        try {
            take(provider.generate(sub));
            return received;  // full or short batch; caller loops for quota
        } catch (TransportError& e) {
            take(std::move(e.partial));
            last_error = e.what();
            if (static_cast<int>(received.size()) >= request.count) return received;
        }
    }
    throw PartialResultError(
        strf("transport failed after ", policy.max_attempts, " attempts (", last_error, "); ",
             received.size(), " of ", request.count, " images received"),
        std::move(received));
}

}  // namespace synthcxr::gen

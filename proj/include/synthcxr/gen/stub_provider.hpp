#pragma once

#include <cstdint>

#include "synthcxr/gen/provider.hpp"

namespace synthcxr::gen {

/// Deterministic local stand-in for the remote generation service: renders
/// portrait torso-like images with lung fields, rib texture and, for
/// pneumonia, bright opacity blobs inside a lung, plus a synthetic watermark
/// band in the lower region. Blob geometry is reported in the image metadata
/// so tests can localize the discriminative region.
class StubGenerationProvider : public GenerationProvider {
public:
    explicit StubGenerationProvider(std::uint64_t seed) : seed_(seed) {}

    std::vector<RawImage> generate(const GenerationRequest& request) override;
    std::string name() const override { return "stub"; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace synthcxr::gen

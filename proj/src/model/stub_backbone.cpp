#include "synthcxr/core/rng.hpp"
#include "synthcxr/model/backbone.hpp"

namespace synthcxr::model {

namespace {

class StubConvBackbone : public BackboneProvider {
public:
    explicit StubConvBackbone(std::uint64_t seed)
        : seed_(seed),
          conv1_("backbone.conv1", 3, 8, 3, 2, 1),
          conv2_("backbone.conv2", 8, 16, 3, 2, 1),
          conv3_("backbone.conv3", 16, 32, 3, 2, 1) {
        Rng rng(mix_seed(seed, "stub_conv_init"));
        conv1_.init_he(rng);
        conv2_.init_he(rng);
        conv3_.init_he(rng);
    }

    BackboneDescriptor descriptor() const override { return {"stub_conv", 32, "none"}; }

    BackboneOptions options() const override {
        BackboneOptions o;
        o.name = "stub_conv";
        o.stub_seed = seed_;
        return o;
    }

    BackboneOutput forward(const nn::Tensor& batch, bool train) override {
        nn::Tensor h = relu1_.forward(conv1_.forward(batch, train), train);
        h = relu2_.forward(conv2_.forward(h, train), train);
        h = relu3_.forward(conv3_.forward(h, train), train);
        BackboneOutput out;
        out.pooled = pool_.forward(h, train);
        out.conv_maps = std::move(h);
        return out;
    }

    void backward_from_pooled(const nn::Tensor& grad_pooled) override {
        nn::Tensor g = pool_.backward(grad_pooled);
        g = conv3_.backward(relu3_.backward(g));
        g = conv2_.backward(relu2_.backward(g));
        conv1_.backward(relu1_.backward(g));
    }

    std::vector<nn::Param*> params() override {
        std::vector<nn::Param*> out;
        conv1_.collect_params(out);
        conv2_.collect_params(out);
        conv3_.collect_params(out);
        return out;
    }

private:
    std::uint64_t seed_;
    nn::Conv2d conv1_, conv2_, conv3_;
    nn::ReLU relu1_, relu2_, relu3_;
    nn::GlobalAvgPool pool_;
};

}  // namespace

std::shared_ptr<BackboneProvider> make_stub_backbone(std::uint64_t seed) {
    return std::make_shared<StubConvBackbone>(seed);
}

std::shared_ptr<BackboneProvider> make_backbone(const BackboneOptions& options) {
    if (options.name == "stub_conv") return make_stub_backbone(options.stub_seed);
    if (options.name == "resnet50") return make_resnet50_backbone(options.weights_path);
    fail("unknown backbone '", options.name, "'");
}

}  // namespace synthcxr::model

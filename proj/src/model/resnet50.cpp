#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>
#include <map>

#include "synthcxr/core/rng.hpp"
#include "synthcxr/model/backbone.hpp"

namespace synthcxr::model {

namespace {

using nn::Tensor;

/// conv1x1/conv3x3 -> bn -> (relu) building block of the bottleneck.
class Bottleneck {
public:
    Bottleneck(const std::string& prefix, int in_ch, int mid, int out_ch, int stride)
        : conv1_(prefix + ".conv1", in_ch, mid, 1, 1, 0, false),
          bn1_(prefix + ".bn1", mid),
          conv2_(prefix + ".conv2", mid, mid, 3, stride, 1, false),
          bn2_(prefix + ".bn2", mid),
          conv3_(prefix + ".conv3", mid, out_ch, 1, 1, 0, false),
          bn3_(prefix + ".bn3", out_ch),
          has_down_(stride != 1 || in_ch != out_ch) {
        if (has_down_) {
            down_conv_ = std::make_unique<nn::Conv2d>(prefix + ".downsample.0", in_ch, out_ch, 1,
                                                      stride, 0, false);
            down_bn_ = std::make_unique<nn::BatchNorm2d>(prefix + ".downsample.1", out_ch);
        }
    }

    Tensor forward(const Tensor& x, bool train) {
        Tensor identity =
            has_down_ ? down_bn_->forward(down_conv_->forward(x, train), train) : x;
        Tensor h = relu1_.forward(bn1_.forward(conv1_.forward(x, train), train), train);
        h = relu2_.forward(bn2_.forward(conv2_.forward(h, train), train), train);
        h = bn3_.forward(conv3_.forward(h, train), train);
        for (std::size_t i = 0; i < h.size(); ++i) h.data[i] += identity.data[i];
        return relu_out_.forward(h, train);
    }

    Tensor backward(const Tensor& grad_out) {
        Tensor g = relu_out_.backward(grad_out);
        Tensor g_branch = conv1_.backward(bn1_.backward(relu1_.backward(
            conv2_.backward(bn2_.backward(relu2_.backward(
                conv3_.backward(bn3_.backward(g))))))));
        Tensor g_identity =
            has_down_ ? down_conv_->backward(down_bn_->backward(g)) : std::move(g);
        for (std::size_t i = 0; i < g_branch.size(); ++i) {
            g_branch.data[i] += g_identity.data[i];
        }
        return g_branch;
    }

    void init_he(Rng& rng) {
        conv1_.init_he(rng);
        conv2_.init_he(rng);
        conv3_.init_he(rng);
        if (has_down_) down_conv_->init_he(rng);
    }

    void collect(std::vector<nn::Param*>& params, std::vector<nn::Param*>& buffers) {
        conv1_.collect_params(params);
        bn1_.collect_params(params);
        bn1_.collect_buffers(buffers);
        conv2_.collect_params(params);
        bn2_.collect_params(params);
        bn2_.collect_buffers(buffers);
        conv3_.collect_params(params);
        bn3_.collect_params(params);
        bn3_.collect_buffers(buffers);
        if (has_down_) {
            down_conv_->collect_params(params);
            down_bn_->collect_params(params);
            down_bn_->collect_buffers(buffers);
        }
    }

private:
    nn::Conv2d conv1_;
    nn::BatchNorm2d bn1_;
    nn::Conv2d conv2_;
    nn::BatchNorm2d bn2_;
    nn::Conv2d conv3_;
    nn::BatchNorm2d bn3_;
    nn::ReLU relu1_, relu2_, relu_out_;
    bool has_down_;
    std::unique_ptr<nn::Conv2d> down_conv_;
    std::unique_ptr<nn::BatchNorm2d> down_bn_;
};

constexpr char kWeightsMagic[8] = {'S', 'X', 'R', 'W', 'G', 'T', '0', '1'};

class Resnet50Backbone : public BackboneProvider {
public:
    explicit Resnet50Backbone(const std::string& weights_path)
        : weights_path_(weights_path),
          conv1_("backbone.conv1", 3, 64, 7, 2, 3, false),
          bn1_("backbone.bn1", 64),
          maxpool_(3, 2, 1) {
        build_stage("layer1", 64, 64, 256, 1, 3);
        build_stage("layer2", 256, 128, 512, 2, 4);
        build_stage("layer3", 512, 256, 1024, 2, 6);
        build_stage("layer4", 1024, 512, 2048, 2, 3);

        if (weights_path.empty()) {
            Rng rng(mix_seed(0, "resnet50_init"));
            conv1_.init_he(rng);
            for (auto& b : blocks_) b->init_he(rng);
        } else {
            load_weights(weights_path);
        }
    }

    BackboneDescriptor descriptor() const override {
        return {"resnet50", 2048, weights_path_.empty() ? "none" : "imagenet"};
    }

    BackboneOptions options() const override {
        BackboneOptions o;
        o.name = "resnet50";
        o.weights_path = weights_path_;
        return o;
    }

    BackboneOutput forward(const Tensor& batch, bool train) override {
        Tensor h = relu1_.forward(bn1_.forward(conv1_.forward(batch, train), train), train);
        h = maxpool_.forward(h, train);
        for (auto& b : blocks_) h = b->forward(h, train);
        BackboneOutput out;
        out.pooled = pool_.forward(h, train);
        out.conv_maps = std::move(h);
        return out;
    }

    void backward_from_pooled(const Tensor& grad_pooled) override {
        Tensor g = pool_.backward(grad_pooled);
        for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = (*it)->backward(g);
        g = maxpool_.backward(g);
        conv1_.backward(bn1_.backward(relu1_.backward(g)));
    }

    std::vector<nn::Param*> params() override {
        std::vector<nn::Param*> out, buffers;
        collect(out, buffers);
        return out;
    }

    std::vector<nn::Param*> buffers() override {
        std::vector<nn::Param*> params, out;
        collect(params, out);
        return out;
    }

private:
    void build_stage(const std::string& name, int in_ch, int mid, int out_ch, int stride,
                     int count) {
        for (int i = 0; i < count; ++i) {
            blocks_.push_back(std::make_unique<Bottleneck>(
                strf("backbone.", name, ".", i), i == 0 ? in_ch : out_ch, mid, out_ch,
                i == 0 ? stride : 1));
        }
    }

    void collect(std::vector<nn::Param*>& params, std::vector<nn::Param*>& buffers) {
        conv1_.collect_params(params);
        bn1_.collect_params(params);
        bn1_.collect_buffers(buffers);
        for (auto& b : blocks_) b->collect(params, buffers);
    }

    void load_weights(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) fail("cannot open backbone weights: ", path);
        char magic[8];
        in.read(magic, 8);
        if (!in || std::memcmp(magic, kWeightsMagic, 8) != 0) {
            fail("bad weights file magic: ", path);
        }
        std::uint64_t meta_len = 0;
        in.read(reinterpret_cast<char*>(&meta_len), 8);
        std::string meta_text(meta_len, '\0');
        in.read(meta_text.data(), static_cast<std::streamsize>(meta_len));
        if (!in) fail("truncated weights file: ", path);
        nlohmann::json meta = nlohmann::json::parse(meta_text);
        if (meta.value("arch", "") != "resnet50") {
            fail("weights file is for arch '", meta.value("arch", "?"), "', expected resnet50");
        }

        std::map<std::string, nn::Param*> by_name;
        std::vector<nn::Param*> params, buffers;
        collect(params, buffers);
        for (nn::Param* p : params) by_name[p->name] = p;
        for (nn::Param* p : buffers) by_name[p->name] = p;

        std::size_t loaded = 0;
        for (const auto& t : meta.at("tensors")) {
            const std::string name = "backbone." + t.at("name").get<std::string>();
            std::size_t count = 1;
            for (const auto& d : t.at("shape")) count *= d.get<std::size_t>();
            std::vector<float> buf(count);
            in.read(reinterpret_cast<char*>(buf.data()),
                    static_cast<std::streamsize>(count * sizeof(float)));
            if (!in) fail("truncated weights data at tensor '", name, "'");
            auto it = by_name.find(name);
            if (it == by_name.end()) continue;  // e.g. the classifier fc of the source model
            if (it->second->value.size() != count) {
                fail("shape mismatch for '", name, "': file has ", count, " values, model wants ",
                     it->second->value.size());
            }
            for (std::size_t i = 0; i < count; ++i) {
                it->second->value.data[i] = static_cast<double>(buf[i]);
            }
            ++loaded;
        }
        const std::size_t expected = by_name.size();
        if (loaded != expected) {
            fail("weights file covered ", loaded, " of ", expected, " model tensors: ", path);
        }
    }

    std::string weights_path_;
    nn::Conv2d conv1_;
    nn::BatchNorm2d bn1_;
    nn::ReLU relu1_;
    nn::MaxPool2d maxpool_;
    std::vector<std::unique_ptr<Bottleneck>> blocks_;
    nn::GlobalAvgPool pool_;
};

}  // namespace

std::shared_ptr<BackboneProvider> make_resnet50_backbone(const std::string& weights_path) {
    return std::make_shared<Resnet50Backbone>(weights_path);
}

}  // namespace synthcxr::model

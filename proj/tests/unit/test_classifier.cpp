#include <doctest.h>

#include <cmath>

#include "synthcxr/model/classifier.hpp"
#include "test_support.hpp"

using namespace synthcxr;
using namespace synthcxr::model;
using dataset::ClassLabel;
using dataset::DatasetManifest;
using testsupport::TempDir;

namespace {

nn::Tensor random_batch(int n, Rng& rng) {
    nn::Tensor t({n, 3, prep::kInputSize, prep::kInputSize});
    for (auto& v : t.data) v = rng.normal(0.0, 0.5);
    return t;
}

/// Writes a tiny two-class image set: dark squares vs bright squares.
DatasetManifest toy_manifest(const std::filesystem::path& dir, int per_class,
                             dataset::Split split, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    DatasetManifest m;
    m.provenance = "toy";
    Rng rng(seed);
    for (int i = 0; i < per_class * 2; ++i) {
        const ClassLabel label = i % 2 == 0 ? ClassLabel::healthy : ClassLabel::pneumonia;
        const int base = label == ClassLabel::healthy ? 60 : 190;
        Image img(64, 64, 1);
        for (auto& p : img.pixels) {
            p = static_cast<std::uint8_t>(
                std::clamp(base + static_cast<int>(rng.normal(0, 12)), 0, 255));
        }
        const auto path = dir / strf(dataset::to_string(label), "_", i, ".png");
        save_png(img, path);
        dataset::ImageRecord r;
        r.id = strf("toy", i);
        r.path = path.string();
        r.label = label;
        r.source = dataset::Source::procedural_stub;
        r.split = split;
        r.content_hash = content_hash_hex(img);
        m.records.push_back(r);
    }
    return m;
}

}  // namespace

TEST_CASE("build_model shapes and seeding") {
    auto provider = make_stub_backbone(0);
    CHECK(provider->descriptor().feature_dim == 32);

    ClassifierModel model = build_model(provider, 16, 3);
    Rng rng(1);
    nn::Tensor logits = model.forward_logits(random_batch(2, rng), false);
    CHECK(logits.shape == std::vector<int>{2, 2});
    const auto& out = model.last_backbone_output();
    CHECK(out.pooled.shape == std::vector<int>{2, 32});
    CHECK(out.conv_maps.shape == std::vector<int>{2, 32, 28, 28});

    // Same seed -> identical head parameters.
    ClassifierModel twin = build_model(make_stub_backbone(0), 16, 3);
    auto params_a = model.state_tensors();
    auto params_b = twin.state_tensors();
    REQUIRE(params_a.size() == params_b.size());
    for (std::size_t i = 0; i < params_a.size(); ++i) {
        CHECK(params_a[i]->name == params_b[i]->name);
        CHECK(params_a[i]->value.data == params_b[i]->value.data);
    }

    CHECK_THROWS_AS(build_model(provider, 0, 1), Error);
}

TEST_CASE("head gradients match finite differences") {
    // The two-layer head in isolation: loss = projection of logits.
    auto provider = make_stub_backbone(1);
    ClassifierModel model = build_model(provider, 8, 5);
    Rng rng(17);

    for (int trial = 0; trial < 20; ++trial) {
        nn::Tensor pooled({2, 32});
        for (auto& v : pooled.data) v = rng.normal();

        nn::Linear fc1("h.fc1", 32, 8), fc2("h.fc2", 8, 2);
        Rng wrng(trial + 1);
        fc1.init_he(wrng);
        fc2.init_he(wrng);
        nn::ReLU relu;

        auto forward = [&](const nn::Tensor& x) {
            return fc2.forward(relu.forward(fc1.forward(x, true), true), true);
        };
        nn::Tensor out = forward(pooled);
        std::vector<double> coeffs(out.size());
        for (auto& c : coeffs) c = rng.normal();
        auto loss_of = [&](const nn::Tensor& o) {
            double s = 0;
            for (std::size_t i = 0; i < o.size(); ++i) s += coeffs[i] * o.data[i];
            return s;
        };
        nn::Tensor g(out.shape);
        for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = coeffs[i];

        fc1.weight.grad.zero();
        fc1.bias.grad.zero();
        fc2.weight.grad.zero();
        fc2.bias.grad.zero();
        fc1.backward(relu.backward(fc2.backward(g)));

        const double step = 1e-4;
        auto check_param = [&](nn::Param& p) {
            for (std::size_t i = 0; i < p.value.size();
                 i += std::max<std::size_t>(1, p.value.size() / 10)) {
                const double keep = p.value.data[i];
                p.value.data[i] = keep + step;
                const double up = loss_of(forward(pooled));
                p.value.data[i] = keep - step;
                const double down = loss_of(forward(pooled));
                p.value.data[i] = keep;
                forward(pooled);
                const double numeric = (up - down) / (2 * step);
                const double rel = std::abs(p.grad.data[i] - numeric) /
                                   std::max(1e-8, std::abs(numeric));
                CHECK(rel < 1e-3);
            }
        };
        check_param(fc1.weight);
        check_param(fc1.bias);
        check_param(fc2.weight);
        check_param(fc2.bias);
    }
}

TEST_CASE("select_best_epoch is argmax with earliest tie") {
    CHECK(select_best_epoch({0.5, 0.9, 0.7}) == 1);
    CHECK(select_best_epoch({0.5, 0.9, 0.9}) == 1);
    CHECK(select_best_epoch({0.9, 0.5, 0.9}) == 0);
    CHECK(select_best_epoch({0.3}) == 0);
    CHECK_THROWS_AS(select_best_epoch({}), Error);
}

TEST_CASE("training solves the toy separable problem and logs epochs") {
    TempDir tmp("train");
    const DatasetManifest train_m =
        toy_manifest(tmp.path() / "train", 8, dataset::Split::train, 1);
    const DatasetManifest val_m = toy_manifest(tmp.path() / "val", 3, dataset::Split::val, 2);

    auto provider = make_stub_backbone(7);
    ClassifierModel model = build_model(provider, 8, 7);

    TrainOptions options;
    options.config.epochs = 5;
    options.config.learning_rate = 1e-3;
    options.config.batch_size = 4;
    options.config.seed = 7;
    options.config.hidden_width = 8;
    options.augment = prep::AugmentConfig::identity();
    options.model_tag = "toy";
    options.epoch_log_path = tmp.path() / "epochs.jsonl";

    std::vector<EpochLogEntry> log;
    Checkpoint ckpt = model::train(model, train_m, val_m, options, &log);

    REQUIRE(log.size() == 5);
    CHECK(ckpt.val_metric == doctest::Approx(1.0));
    CHECK(ckpt.selected_epoch >= 1);
    CHECK(ckpt.model_tag == "toy");
    CHECK(ckpt.provenance.find("epochs=5") != std::string::npos);

    // Loss decreases after warm-up on this separable toy problem.
    for (std::size_t i = 2; i < log.size(); ++i) {
        CHECK(log[i].train_loss <= log[i - 1].train_loss + 1e-6);
    }
    CHECK(std::filesystem::exists(options.epoch_log_path));

    SUBCASE("checkpoint round-trip reproduces predictions") {
        const auto ckpt_path = tmp.path() / "model.ckpt";
        save_checkpoint(ckpt, ckpt_path);
        const Checkpoint loaded = load_checkpoint(ckpt_path);
        CHECK(loaded.selected_epoch == ckpt.selected_epoch);
        CHECK(loaded.hidden_width == ckpt.hidden_width);
        CHECK(loaded.config.learning_rate == ckpt.config.learning_rate);

        const auto before = predict_proba(ckpt, val_m, 4);
        const auto after = predict_proba(loaded, val_m, 4);
        REQUIRE(before.size() == after.size());
        for (std::size_t i = 0; i < before.size(); ++i) {
            CHECK(before[i].record_id == after[i].record_id);
            CHECK(std::abs(before[i].score - after[i].score) < 1e-5);
        }
    }

    SUBCASE("per-epoch losses are reproducible for a fixed seed") {
        auto provider2 = make_stub_backbone(7);
        ClassifierModel model2 = build_model(provider2, 8, 7);
        std::vector<EpochLogEntry> log2;
        model::train(model2, train_m, val_m, options, &log2);
        REQUIRE(log2.size() == log.size());
        for (std::size_t i = 0; i < log.size(); ++i) {
            CHECK(std::abs(log[i].train_loss - log2[i].train_loss) < 1e-5);
            CHECK(log[i].val_auroc == doctest::Approx(log2[i].val_auroc));
        }
    }

    SUBCASE("predict_proba is deterministic and bounded") {
        const auto scored = predict_proba(ckpt, val_m, 3);
        REQUIRE(scored.size() == val_m.records.size());
        for (const auto& s : scored) {
            CHECK(s.score >= 0.0);
            CHECK(s.score <= 1.0);
        }
        const auto scored2 = predict_proba(ckpt, val_m, 5);  // different batching
        for (std::size_t i = 0; i < scored.size(); ++i) {
            CHECK(scored[i].score == doctest::Approx(scored2[i].score).epsilon(1e-12));
        }
    }

    SUBCASE("feature extraction shape and duplicates") {
        repr::FeatureMatrix fm = extract_features(ckpt, val_m, 4);
        CHECK(fm.n == static_cast<int>(val_m.records.size()));
        CHECK(fm.d == 32);
        CHECK(fm.model_tag == "toy");

        DatasetManifest dup = val_m;
        dup.records.push_back(dup.records[0]);
        dup.records.back().id = "dup";
        repr::FeatureMatrix fm2 = extract_features(ckpt, dup, 4);
        for (int j = 0; j < fm2.d; ++j) {
            CHECK(fm2.at(0, j) == doctest::Approx(fm2.at(fm2.n - 1, j)).epsilon(1e-12));
        }
    }
}

TEST_CASE("black and white images give distinct features") {
    TempDir tmp("feat");
    save_png(testsupport::constant_image(64, 64, 1, 0), tmp.path() / "black.png");
    save_png(testsupport::constant_image(64, 64, 1, 255), tmp.path() / "white.png");
    DatasetManifest m;
    for (const char* name : {"black", "white"}) {
        dataset::ImageRecord r;
        r.id = name;
        r.path = (tmp.path() / (std::string(name) + ".png")).string();
        r.label = ClassLabel::healthy;
        r.split = dataset::Split::eval_external;
        m.records.push_back(r);
    }
    auto provider = make_stub_backbone(3);
    ClassifierModel model = build_model(provider, 8, 3);
    repr::FeatureMatrix fm = extract_features(model, m, 2);
    double diff = 0.0;
    for (int j = 0; j < fm.d; ++j) diff += std::abs(fm.at(0, j) - fm.at(1, j));
    CHECK(diff > 1e-6);
}

TEST_CASE("training rejects degenerate splits") {
    TempDir tmp("degen");
    DatasetManifest train_m = toy_manifest(tmp.path() / "t", 3, dataset::Split::train, 1);
    DatasetManifest val_m = toy_manifest(tmp.path() / "v", 2, dataset::Split::val, 2);

    DatasetManifest single = train_m;
    for (auto& r : single.records) r.label = ClassLabel::pneumonia;

    auto provider = make_stub_backbone(1);
    ClassifierModel model = build_model(provider, 8, 1);
    TrainOptions options;
    options.config.epochs = 1;
    CHECK_THROWS_WITH_AS(model::train(model, single, val_m, options),
                         doctest::Contains("single-class training"), Error);

    DatasetManifest empty;
    CHECK_THROWS_AS(model::train(model, empty, val_m, options), Error);
}

TEST_CASE("cam construction from maps and gradients") {
    SUBCASE("single channel, uniform positive gradient: proportional, max 1") {
        nn::Tensor maps({1, 1, 2, 2});
        maps.data = {0.0, 2.0, 1.0, 4.0};
        nn::Tensor grads({1, 1, 2, 2});
        std::fill(grads.data.begin(), grads.data.end(), 0.5);
        const auto cam = cam_from_maps(maps, grads, 0, 2, 2);
        REQUIRE(cam.size() == 4);
        CHECK(cam[0] == doctest::Approx(0.0));
        CHECK(cam[1] == doctest::Approx(0.5));
        CHECK(cam[2] == doctest::Approx(0.25));
        CHECK(cam[3] == 1.0f);
    }

    SUBCASE("all-negative weighted sum: all zeros") {
        nn::Tensor maps({1, 2, 3, 3});
        for (std::size_t i = 0; i < maps.size(); ++i) maps.data[i] = 1.0 + (i % 5);
        nn::Tensor grads({1, 2, 3, 3});
        std::fill(grads.data.begin(), grads.data.end(), -1.0);
        const auto cam = cam_from_maps(maps, grads, 0, 6, 6);
        REQUIRE(cam.size() == 36);
        for (float v : cam) CHECK(v == 0.0f);
    }

    SUBCASE("values bounded in [0,1] and upsampled to the requested size") {
        Rng rng(12);
        nn::Tensor maps({1, 4, 7, 7});
        nn::Tensor grads({1, 4, 7, 7});
        for (auto& v : maps.data) v = rng.normal();
        for (auto& v : grads.data) v = rng.normal();
        const auto cam = cam_from_maps(maps, grads, 0, 224, 224);
        REQUIRE(cam.size() == 224u * 224u);
        for (float v : cam) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("grad_cam on a model matches the input image size") {
    auto provider = make_stub_backbone(2);
    ClassifierModel model = build_model(provider, 8, 2);
    const Image img = testsupport::noise_image(300, 250, 1, 33);

    const CamMap cam = grad_cam(model, img, -1, "rec1");
    CHECK(cam.height == 300);
    CHECK(cam.width == 250);
    CHECK(cam.values.size() == 300u * 250u);
    CHECK(cam.record_id == "rec1");
    for (float v : cam.values) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }

    const CamMap forced = grad_cam(model, img, 1, "rec1");
    CHECK(forced.target == ClassLabel::pneumonia);
}

TEST_CASE("eval path ignores augmentation config by construction") {
    // Two training runs with different augmentation differ, but evaluating a
    // fixed checkpoint never touches augmentation.
    TempDir tmp("wiring");
    const DatasetManifest train_m =
        toy_manifest(tmp.path() / "train", 4, dataset::Split::train, 5);
    const DatasetManifest val_m = toy_manifest(tmp.path() / "val", 2, dataset::Split::val, 6);

    TrainOptions plain;
    plain.config.epochs = 2;
    plain.config.batch_size = 4;
    plain.config.seed = 9;
    plain.augment = prep::AugmentConfig::identity();

    TrainOptions augmented = plain;
    augmented.augment = prep::AugmentConfig{};  // full default augmentation

    auto p1 = make_stub_backbone(9);
    ClassifierModel m1 = build_model(p1, 8, 9);
    std::vector<EpochLogEntry> log1;
    model::train(m1, train_m, val_m, plain, &log1);

    auto p2 = make_stub_backbone(9);
    ClassifierModel m2 = build_model(p2, 8, 9);
    std::vector<EpochLogEntry> log2;
    model::train(m2, train_m, val_m, augmented, &log2);

    // Augmentation changed the training trajectory...
    CHECK(log1[0].train_loss != log2[0].train_loss);

    // ...but prediction on a fixed model is augmentation-free and stable.
    const auto s1 = predict_proba(m1, val_m, 4);
    const auto s2 = predict_proba(m1, val_m, 4);
    for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].score == s2[i].score);
}

#include <doctest.h>

#include <httplib.h>

#include <nlohmann/json.hpp>

#include <atomic>
#include <thread>

#include "synthcxr/core/base64.hpp"
#include "synthcxr/gen/curate.hpp"
#include "synthcxr/gen/http_provider.hpp"
#include "synthcxr/gen/stub_provider.hpp"
#include "test_support.hpp"

using namespace synthcxr;
using namespace synthcxr::gen;
using dataset::ClassLabel;
using testsupport::TempDir;

TEST_CASE("build_prompt resolves the class and count slots") {
    const std::string p10 = build_prompt(ClassLabel::pneumonia, 10);
    CHECK(p10.rfind("Generate 10 Chest X-ray imaging data", 0) == 0);
    CHECK(p10.find("different pneumonia patients") != std::string::npos);
    CHECK(p10.find("generate 10 images") != std::string::npos);
    CHECK(p10.find("portrait orientation with height greater than width") != std::string::npos);
    CHECK(p10.find("{count}") == std::string::npos);
    CHECK(p10.find("{class}") == std::string::npos);

    const std::string h1 = build_prompt(ClassLabel::healthy, 1);
    CHECK(h1.rfind("Generate 1 Chest X-ray imaging data", 0) == 0);
    CHECK(h1.find("different healthy patients") != std::string::npos);

    CHECK(build_prompt(ClassLabel::healthy, 10) == build_prompt(ClassLabel::healthy, 10));
    CHECK_THROWS_AS(build_prompt(ClassLabel::healthy, 0), Error);
}

TEST_CASE("crop_lower_fraction keeps the top rows bit-exactly") {
    const Image img = testsupport::noise_image(1000, 800, 1, 3);
    const Image cropped = crop_lower_fraction(img, 0.30);
    CHECK(cropped.height == 700);
    CHECK(cropped.width == 800);
    for (int y = 0; y < 700; y += 13) {
        for (int x = 0; x < 800; x += 7) {
            CHECK(cropped.at(y, x, 0) == img.at(y, x, 0));
        }
    }

    // Identity case.
    const Image same = crop_lower_fraction(img, 0.0);
    CHECK(same == img);
    CHECK(crop_lower_fraction(same, 0.0) == img);

    // Rounding rule: ceil on retained rows.
    Image small = testsupport::noise_image(7, 3, 1, 4);
    CHECK(crop_lower_fraction(small, 0.30).height == 5);
}

TEST_CASE("crop rounding matches exact rational ceil for H in 2..100") {
    // fractions num/10; exact retained rows = ceil(H*(10-num)/10).
    for (int num : {0, 1, 3, 5}) {
        const double fraction = num / 10.0;
        for (int h = 2; h <= 100; ++h) {
            const int expected = (h * (10 - num) + 9) / 10;
            const Image img = testsupport::constant_image(h, 4, 1, 9);
            CHECK(crop_lower_fraction(img, fraction).height == expected);
        }
    }
}

TEST_CASE("crop equals direct row slicing for random images and fractions") {
    Rng rng(8);
    for (double fraction : {0.0, 0.1, 0.3, 0.5}) {
        for (int trial = 0; trial < 5; ++trial) {
            const int h = 2 + static_cast<int>(rng.uniform_int(120));
            const int w = 1 + static_cast<int>(rng.uniform_int(90));
            const int c = rng.bernoulli(0.5) ? 1 : 3;
            const Image img = testsupport::noise_image(h, w, c, rng.next_u64());
            const Image cropped = crop_lower_fraction(img, fraction);

            const int keep = (h * (10 - static_cast<int>(fraction * 10 + 0.5)) + 9) / 10;
            REQUIRE(cropped.height == keep);
            const std::size_t bytes = static_cast<std::size_t>(keep) * w * c;
            CHECK(std::equal(cropped.pixels.begin(), cropped.pixels.end(), img.pixels.begin(),
                             img.pixels.begin() + bytes));
        }
    }
}

TEST_CASE("crop rejects out-of-range fractions and tiny images") {
    const Image img = testsupport::constant_image(10, 5, 1, 1);
    CHECK_THROWS_AS(crop_lower_fraction(img, 1.0), Error);
    CHECK_THROWS_AS(crop_lower_fraction(img, -0.1), Error);
    CHECK_THROWS_AS(crop_lower_fraction(testsupport::constant_image(1, 5, 1, 1), 0.3), Error);
}

TEST_CASE("stub provider is deterministic and portrait") {
    GenerationRequest req;
    req.prompt = build_prompt(ClassLabel::pneumonia, 10);
    req.count = 10;
    req.target_class = ClassLabel::pneumonia;
    req.session_tag = "unit";

    StubGenerationProvider a(7), b(7), c(8);
    const auto batch_a = a.generate(req);
    const auto batch_b = b.generate(req);
    const auto batch_c = c.generate(req);
    REQUIRE(batch_a.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(batch_a[i].pixels.height > batch_a[i].pixels.width);
        CHECK(batch_a[i].pixels == batch_b[i].pixels);
        CHECK(batch_a[i].provider_metadata == batch_b[i].provider_metadata);
    }
    CHECK(batch_a[0].pixels != batch_c[0].pixels);
    // Metadata carries blob geometry for pneumonia cases.
    const auto meta = nlohmann::json::parse(batch_a[0].provider_metadata);
    CHECK(meta.at("class") == "pneumonia");
    CHECK(meta.at("blobs").size() >= 1);

    GenerationRequest healthy = req;
    healthy.target_class = ClassLabel::healthy;
    StubGenerationProvider d(7);
    const auto batch_h = d.generate(healthy);
    const auto hmeta = nlohmann::json::parse(batch_h[0].provider_metadata);
    CHECK(hmeta.at("blobs").empty());
}

namespace {

/// Scripted provider for retry-path tests.
class ScriptedProvider : public GenerationProvider {
public:
    struct Step {
        enum Kind { ok, transport, transport_partial, refusal } kind = ok;
        int images = 0;
    };
    explicit ScriptedProvider(std::vector<Step> steps) : steps_(std::move(steps)) {}

    std::vector<RawImage> generate(const GenerationRequest& request) override {
        REQUIRE(call < static_cast<int>(steps_.size()));
        const Step step = steps_[call++];
        auto make = [&](int n) {
            std::vector<RawImage> out;
            for (int i = 0; i < n; ++i) {
                RawImage img;
                img.pixels = testsupport::noise_image(30, 20, 1, call * 100 + i);
                img.provider_metadata = "{}";
                out.push_back(std::move(img));
            }
            return out;
        };
        switch (step.kind) {
            case Step::ok: return make(std::min(step.images, request.count));
            case Step::transport: throw TransportError("connection reset");
            case Step::transport_partial:
                throw TransportError("connection reset mid-stream", make(step.images));
            case Step::refusal: throw ProviderRefusalError("policy refusal");
        }
        return {};
    }
    std::string name() const override { return "scripted"; }

    int call = 0;

private:
    std::vector<Step> steps_;
};

}  // namespace

TEST_CASE("request_batch retries transport failures with backoff") {
    ScriptedProvider provider({{ScriptedProvider::Step::transport, 0},
                               {ScriptedProvider::Step::transport, 0},
                               {ScriptedProvider::Step::ok, 5}});
    GenerationRequest req{build_prompt(ClassLabel::healthy, 5), 5, ClassLabel::healthy, "t"};
    int persisted = 0;
    RawSink sink = [&](const RawImage&) { ++persisted; };
    const auto images = request_batch(provider, req, sink, {4, 1});
    CHECK(images.size() == 5);
    CHECK(provider.call == 3);
    CHECK(persisted == 5);
}

TEST_CASE("request_batch carries partial results into the terminal error") {
    ScriptedProvider provider({{ScriptedProvider::Step::transport_partial, 4},
                               {ScriptedProvider::Step::transport, 0},
                               {ScriptedProvider::Step::transport, 0}});
    GenerationRequest req{build_prompt(ClassLabel::healthy, 10), 10, ClassLabel::healthy, "t"};
    int persisted = 0;
    RawSink sink = [&](const RawImage&) { ++persisted; };
    try {
        request_batch(provider, req, sink, {3, 1});
        FAIL("expected PartialResultError");
    } catch (const PartialResultError& e) {
        CHECK(e.received.size() == 4);
        CHECK(persisted == 4);  // persisted before the error surfaced
    }
}

TEST_CASE("request_batch surfaces refusals immediately and checks preconditions") {
    ScriptedProvider provider({{ScriptedProvider::Step::refusal, 0}});
    GenerationRequest req{build_prompt(ClassLabel::healthy, 2), 2, ClassLabel::healthy, "t"};
    CHECK_THROWS_AS(request_batch(provider, req, nullptr, {4, 1}), ProviderRefusalError);
    CHECK(provider.call == 1);

    GenerationRequest zero = req;
    zero.count = 0;
    CHECK_THROWS_AS(request_batch(provider, zero), Error);
    GenerationRequest empty = req;
    empty.prompt.clear();
    CHECK_THROWS_AS(request_batch(provider, empty), Error);
}

TEST_CASE("short provider batches are returned for the caller to loop") {
    ScriptedProvider provider({{ScriptedProvider::Step::ok, 3}});
    GenerationRequest req{build_prompt(ClassLabel::healthy, 10), 10, ClassLabel::healthy, "t"};
    const auto images = request_batch(provider, req, nullptr, {4, 1});
    CHECK(images.size() == 3);
}

TEST_CASE("http provider end to end against a local server") {
    httplib::Server server;
    std::atomic<int> failures_left{1};

    server.Post("/v1/generate", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        if (body.value("session_tag", "") == "refuse-me") {
            res.status = 400;
            res.set_content(R"({"error":"prompt rejected by safety filter"})",
                            "application/json");
            return;
        }
        if (failures_left.fetch_sub(1) > 0) {
            res.status = 503;
            res.set_content("busy", "text/plain");
            return;
        }
        nlohmann::json out;
        out["images"] = nlohmann::json::array();
        const int count = body.value("count", 1);
        for (int i = 0; i < count; ++i) {
            const Image img = testsupport::noise_image(40, 30, 1, 1000 + i);
            out["images"].push_back(
                {{"png_base64", base64_encode(encode_png(img))}, {"metadata", "remote"}});
        }
        res.set_content(out.dump(), "application/json");
    });
    server.Post("/v1/garbage", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{not json", "application/json");
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpProviderConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.token_env = "SYNTHCXR_TEST_TOKEN_UNSET";

    SUBCASE("5xx retries then succeeds, images decoded") {
        HttpGenerationProvider provider(config);
        GenerationRequest req{build_prompt(ClassLabel::healthy, 3), 3, ClassLabel::healthy,
                              "ok"};
        const auto images = request_batch(provider, req, nullptr, {4, 1});
        REQUIRE(images.size() == 3);
        CHECK(images[0].pixels.height == 40);
        CHECK(images[0].provider_metadata == "remote");
    }

    SUBCASE("4xx is a refusal with the provider message") {
        HttpGenerationProvider provider(config);
        GenerationRequest req{build_prompt(ClassLabel::healthy, 1), 1, ClassLabel::healthy,
                              "refuse-me"};
        CHECK_THROWS_WITH_AS(provider.generate(req),
                             doctest::Contains("safety filter"), ProviderRefusalError);
    }

    SUBCASE("malformed response body is a transport error") {
        HttpProviderConfig bad = config;
        bad.path = "/v1/garbage";
        HttpGenerationProvider provider(bad);
        GenerationRequest req{build_prompt(ClassLabel::healthy, 1), 1, ClassLabel::healthy, "g"};
        CHECK_THROWS_AS(provider.generate(req), TransportError);
    }

    SUBCASE("unreachable endpoint is a transport error") {
        HttpProviderConfig down = config;
        down.base_url = "http://127.0.0.1:1";
        HttpGenerationProvider provider(down);
        GenerationRequest req{build_prompt(ClassLabel::healthy, 1), 1, ClassLabel::healthy, "d"};
        CHECK_THROWS_AS(provider.generate(req), TransportError);
    }

    server.stop();
    server_thread.join();
}

TEST_CASE("curation crops, dedups, rejects landscape and balances") {
    TempDir tmp("curate");
    StubGenerationProvider provider(3);

    auto make_batch = [&](ClassLabel label, int count) {
        GenerationRequest req{build_prompt(label, count), count, label, "cur"};
        return provider.generate(req);
    };

    std::vector<std::pair<RawImage, ClassLabel>> raw;
    for (auto& img : make_batch(ClassLabel::healthy, 3)) {
        raw.emplace_back(std::move(img), ClassLabel::healthy);
    }
    for (auto& img : make_batch(ClassLabel::pneumonia, 3)) {
        raw.emplace_back(std::move(img), ClassLabel::pneumonia);
    }

    SUBCASE("clean input -> balanced manifest with store files") {
        CurationOptions options;
        const auto result = curate_dataset(raw, options, 11, tmp.path() / "store");
        CHECK(result.manifest.records.size() == 6);
        CHECK(result.manifest.count(dataset::ClassLabel::healthy) == 3);
        CHECK(result.manifest.count(dataset::ClassLabel::pneumonia) == 3);
        CHECK(result.manifest.seed == 11);
        for (const auto& r : result.manifest.records) {
            CHECK(std::filesystem::exists(r.path));
            CHECK(r.split == dataset::Split::unassigned);
            // Stored image is the cropped raster.
            const Image stored = load_raster(r.path);
            CHECK(content_hash_hex(stored) == r.content_hash);
        }
        // Curation log keeps provider metadata for accepted entries.
        int accepted = 0;
        for (const auto& e : result.log) accepted += e.accepted ? 1 : 0;
        CHECK(accepted == 6);

        // Crop actually removed rows.
        const auto meta = nlohmann::json::parse(raw[0].first.provider_metadata);
        const int full_h = meta.at("canvas_h").get<int>();
        const Image stored = load_raster(result.manifest.records[0].path);
        CHECK(stored.height < full_h);
    }

    SUBCASE("duplicate pixels collapse to one record with a logged rejection") {
        auto dup = raw;
        dup.emplace_back(RawImage{dup[0].first.pixels, "{}"}, ClassLabel::healthy);
        dup.emplace_back(RawImage{dup[3].first.pixels, "{}"}, ClassLabel::pneumonia);
        const auto result = curate_dataset(dup, CurationOptions{}, 1, tmp.path() / "dup");
        CHECK(result.manifest.records.size() == 6);
        int dup_rejections = 0;
        for (const auto& e : result.log) {
            if (!e.accepted && e.reason == "duplicate") ++dup_rejections;
        }
        CHECK(dup_rejections == 2);
    }

    SUBCASE("landscape input rejected with reason") {
        auto with_landscape = raw;
        RawImage landscape;
        landscape.pixels = testsupport::noise_image(100, 200, 1, 5);
        with_landscape.emplace_back(std::move(landscape), ClassLabel::healthy);
        CurationOptions tolerant;
        tolerant.balance_tolerance = 1;
        const auto result =
            curate_dataset(with_landscape, tolerant, 1, tmp.path() / "landscape");
        CHECK(result.manifest.records.size() == 6);
        bool found = false;
        for (const auto& e : result.log) {
            if (!e.accepted && e.reason == "not portrait") found = true;
        }
        CHECK(found);
    }

    SUBCASE("imbalance beyond tolerance is fatal with per-class counts") {
        auto lopsided = raw;
        lopsided.pop_back();  // 3 healthy vs 2 pneumonia
        CHECK_THROWS_WITH_AS(curate_dataset(lopsided, CurationOptions{}, 1, tmp.path() / "im"),
                             doctest::Contains("healthy=3"), Error);
    }

    SUBCASE("empty input is fatal") {
        CHECK_THROWS_AS(curate_dataset({}, CurationOptions{}, 1, tmp.path() / "e"), Error);
    }
}

TEST_CASE("curation is byte-reproducible for a fixed seed") {
    TempDir tmp("repro");
    auto run_once = [&](const std::filesystem::path& store) {
        StubGenerationProvider provider(99);
        std::vector<std::pair<RawImage, ClassLabel>> raw;
        for (ClassLabel label : {ClassLabel::healthy, ClassLabel::pneumonia}) {
            GenerationRequest req{build_prompt(label, 4), 4, label, "repro"};
            for (auto& img : provider.generate(req)) raw.emplace_back(std::move(img), label);
        }
        const auto result = curate_dataset(raw, CurationOptions{}, 5, store);
        return dataset::manifest_to_json(result.manifest);
    };
    const std::string first = run_once(tmp.path() / "store");
    std::filesystem::remove_all(tmp.path() / "store");
    const std::string second = run_once(tmp.path() / "store");
    CHECK(first == second);
}

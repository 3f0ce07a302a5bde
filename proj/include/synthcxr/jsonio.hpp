#pragma once

#include <nlohmann/json.hpp>

#include "synthcxr/model/backbone.hpp"
#include "synthcxr/prep/preprocess.hpp"

namespace synthcxr::prep {

inline void to_json(nlohmann::json& j, const AugmentConfig& c) {
    j = nlohmann::json{{"crop_scale_min", c.crop_scale_min},
                       {"crop_scale_max", c.crop_scale_max},
                       {"max_translate_frac", c.max_translate_frac},
                       {"max_shear_deg", c.max_shear_deg},
                       {"max_rotate_deg", c.max_rotate_deg},
                       {"hflip_prob", c.hflip_prob}};
}

inline void from_json(const nlohmann::json& j, AugmentConfig& c) {
    c.crop_scale_min = j.value("crop_scale_min", c.crop_scale_min);
    c.crop_scale_max = j.value("crop_scale_max", c.crop_scale_max);
    c.max_translate_frac = j.value("max_translate_frac", c.max_translate_frac);
    c.max_shear_deg = j.value("max_shear_deg", c.max_shear_deg);
    c.max_rotate_deg = j.value("max_rotate_deg", c.max_rotate_deg);
    c.hflip_prob = j.value("hflip_prob", c.hflip_prob);
}

}  // namespace synthcxr::prep

namespace synthcxr::model {

inline void to_json(nlohmann::json& j, const BackboneOptions& o) {
    j = nlohmann::json{
        {"name", o.name}, {"stub_seed", o.stub_seed}, {"weights_path", o.weights_path}};
}

inline void from_json(const nlohmann::json& j, BackboneOptions& o) {
    o.name = j.value("name", o.name);
    o.stub_seed = j.value("stub_seed", o.stub_seed);
    o.weights_path = j.value("weights_path", o.weights_path);
}

}  // namespace synthcxr::model

#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bilateral.hpp"
#include "guided.hpp"
#include "image.hpp"
#include "l0.hpp"
#include "ops.hpp"
#include "rolling_guidance.hpp"
#include "rtv.hpp"

namespace smoothkit {

// ============================================================================
// Named operator dispatch: an OperatorSpec is a name from {bilateral, guided,
// rolling_guidance, l0, rtv} plus key=value parameters.  Unset parameters
// take the documented defaults; unknown names or keys are rejected.
// ============================================================================
struct OperatorSpec {
    std::string name;
    std::map<std::string, double> params;

    double get(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
    int get_int(const std::string& key, int fallback) const {
        auto it = params.find(key);
        if (it == params.end()) return fallback;
        double v = it->second;
        if (v != std::floor(v))
            throw std::invalid_argument("operator parameter '" + key +
                                        "' must be an integer, got " +
                                        std::to_string(v));
        return static_cast<int>(v);
    }
};

namespace detail {

inline void check_param_keys(const OperatorSpec& spec,
                             std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : spec.params) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok)
            throw std::invalid_argument("operator '" + spec.name +
                                        "' has no parameter '" + key + "'");
    }
}

} // namespace detail

inline const std::vector<std::string>& operator_names() {
    static const std::vector<std::string> names = {"bilateral", "guided",
                                                   "rolling_guidance", "l0", "rtv"};
    return names;
}

// Run one smoothing operator.  The guided filter guides each image by its
// own grayscale projection (single-channel images guide themselves).  If
// clamp_stats is non-null it receives pre-clamp out-of-range telemetry for
// the operators that can overshoot (l0, rtv); others report zeros.
inline Image apply_operator(const OperatorSpec& spec, const Image& img,
                            ClampStats* clamp_stats = nullptr) {
    if (clamp_stats) *clamp_stats = {};
    if (spec.name == "bilateral") {
        detail::check_param_keys(spec, {"sigma_s", "sigma_r"});
        return bilateral(img, spec.get("sigma_s", 3.0), spec.get("sigma_r", 0.1));
    }
    if (spec.name == "guided") {
        detail::check_param_keys(spec, {"radius", "eps"});
        const Image guide = img.channels == 3 ? to_grayscale(img) : img;
        return guided(img, guide, spec.get_int("radius", 3), spec.get("eps", 0.01));
    }
    if (spec.name == "rolling_guidance") {
        detail::check_param_keys(spec, {"sigma_s", "sigma_r", "iters"});
        return rolling_guidance(img, spec.get("sigma_s", 6.0),
                                spec.get("sigma_r", 0.3), spec.get_int("iters", 4));
    }
    if (spec.name == "l0") {
        detail::check_param_keys(spec, {"lambda", "kappa"});
        return l0_smooth(img, spec.get("lambda", 0.01), spec.get("kappa", 2.0),
                         clamp_stats);
    }
    if (spec.name == "rtv") {
        detail::check_param_keys(spec, {"lambda", "sigma", "eps_s", "iters"});
        return rtv(img, spec.get("lambda", 0.01), spec.get("sigma", 3.0),
                   spec.get("eps_s", 0.02), spec.get_int("iters", 3),
                   clamp_stats);
    }
    throw std::invalid_argument("unknown operator '" + spec.name + "' (expected " +
                                "bilateral, guided, rolling_guidance, l0, or rtv)");
}

// Named parameter presets, addressable from the CLI as --preset <name>.
// The fig1-* sets mirror the published figure configurations; bf-over is the
// deliberately over-smoothed bilateral configuration (degenerate kernels:
// near-global averaging — expensive on large images).
inline const std::map<std::string, OperatorSpec>& operator_presets() {
    static const std::map<std::string, OperatorSpec> presets = {
        {"fig1-rgf", {"rolling_guidance", {{"sigma_s", 6.0}, {"sigma_r", 0.3}, {"iters", 4.0}}}},
        {"fig1-l0", {"l0", {{"lambda", 0.01}, {"kappa", 2.0}}}},
        {"fig1-rtv", {"rtv", {{"lambda", 0.01}, {"sigma", 3.0}, {"eps_s", 0.02}, {"iters", 3.0}}}},
        {"fig1-gf", {"guided", {{"radius", 3.0}, {"eps", 0.01}}}},
        {"bf-over", {"bilateral", {{"sigma_s", 1000.0}, {"sigma_r", 200.0}}}},
    };
    return presets;
}

inline OperatorSpec preset(const std::string& name) {
    const auto& table = operator_presets();
    auto it = table.find(name);
    if (it == table.end())
        throw std::invalid_argument("unknown preset '" + name + "'");
    return it->second;
}

} // namespace smoothkit

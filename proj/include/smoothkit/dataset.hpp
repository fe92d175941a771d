#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "image.hpp"
#include "image_io.hpp"
#include "metrics.hpp"
#include "operators.hpp"
#include "ops.hpp"
#include "rng.hpp"

namespace smoothkit {

// ============================================================================
// Dataset synthesis: texture blending, candidate screening, augmentation,
// and manifest construction.
// ============================================================================

// One synthesized training sample: the texture-enhanced input and the smooth
// target it was built from.  gt_source names the smoothing operator that
// produced the target; nullopt means the target came from outside the
// pipeline ("external").
struct BlendPair {
    Image input;
    Image ground_truth;
    std::string texture_id;
    std::optional<OperatorSpec> gt_source;
};

// Mirror-tile `texture` to exactly `width` x `height` (even reflection, so
// tile seams stay continuous); larger textures are cropped at the top-left.
inline Image tile_texture(const Image& texture, int width, int height) {
    auto reflect = [](int i, int n) {
        const int period = 2 * n;
        int m = i % period;
        return m < n ? m : period - 1 - m;
    };
    Image out(width, height, texture.channels);
    for (int c = 0; c < texture.channels; ++c)
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                out.at(x, y, c) =
                    texture.at(reflect(x, texture.width), reflect(y, texture.height), c);
    return out;
}

// Additive grayscale texture layer:
//   out = clamp(gt + (gray(texture) - mean(gray(texture))), 0, 1)
// with the same zero-mean layer added to every channel.  The texture must
// already be tiled to the target dimensions.  If clamp_fraction is non-null
// it receives the fraction of samples clipped by the clamp.
inline Image blend_texture(const Image& gt, const Image& texture,
                           double* clamp_fraction = nullptr) {
    if (texture.width != gt.width || texture.height != gt.height)
        throw std::invalid_argument(
            "blend_texture: texture must be tiled to ground-truth dimensions");
    const Image gray = texture.channels == 3 ? to_grayscale(texture) : texture;
    const double mu = mean_intensity(gray);

    Image out(gt.width, gt.height, gt.channels);
    std::size_t clipped = 0;
    for (int c = 0; c < gt.channels; ++c)
        for (int y = 0; y < gt.height; ++y)
            for (int x = 0; x < gt.width; ++x) {
                const double v = gt.at(x, y, c) + (gray.at(x, y, 0) - mu);
                if (v < 0.0 || v > 1.0) ++clipped;
                out.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
    if (clamp_fraction)
        *clamp_fraction = static_cast<double>(clipped) / out.data.size();
    return out;
}

// ----------------------------------------------------------------------------
// Candidate screening: a candidate becomes the smooth target only if it
// passes the smooth test (edges taken from its own Sobel response) and has
// the highest structural similarity to the original among all passers.
// Full-image SSIM takes the place of a human structure-consistency vote;
// each report records that substitution.
// ----------------------------------------------------------------------------
struct CandidateRecord {
    OperatorSpec op;
    SmoothTestResult smooth;
    double ssim_vs_original = 0.0;
};

struct ScreeningReport {
    std::vector<CandidateRecord> candidates;
    std::optional<std::size_t> selected; // index into candidates
    static constexpr const char* structure_check =
        "full-image ssim vs original (automated substitute for manual "
        "structure-consistency screening)";
};

inline ScreeningReport screen_candidates(
    const Image& original, const std::vector<std::pair<OperatorSpec, Image>>& candidates,
    const WindowSpec& w, double threshold = 0.05, double sobel_threshold = 0.1) {
    if (candidates.empty())
        throw std::invalid_argument("screen_candidates: need at least one candidate");

    ScreeningReport report;
    for (const auto& [op, img] : candidates) {
        if (!img.same_shape(original))
            throw std::invalid_argument(
                "screen_candidates: candidate dimensions must match original");
        CandidateRecord rec;
        rec.op = op;
        const Image gray = img.channels == 3 ? to_grayscale(img) : img;
        rec.smooth = smooth_test(gray, sobel_edges(gray, sobel_threshold), w, threshold);
        rec.ssim_vs_original = ssim(img, original);
        report.candidates.push_back(std::move(rec));
    }
    for (std::size_t i = 0; i < report.candidates.size(); ++i) {
        const auto& rec = report.candidates[i];
        if (!rec.smooth.pass) continue;
        if (!report.selected ||
            rec.ssim_vs_original >
                report.candidates[*report.selected].ssim_vs_original)
            report.selected = i;
    }
    return report;
}

// Edge supervision derived from a selected smooth target.
inline EdgeMap edge_gt_from_smooth(const Image& gt, double threshold = 0.1) {
    const Image gray = gt.channels == 3 ? to_grayscale(gt) : gt;
    return sobel_edges(gray, threshold);
}

// ----------------------------------------------------------------------------
// Augmentation: one jointly applied geometric transform per pair, drawn from
// a counter-based generator so results depend only on the seed.
// ----------------------------------------------------------------------------
struct AugmentDraw {
    bool flip_horizontal = false;
    int quarter_turns = 0; // counterclockwise, 0..3
};

inline AugmentDraw augment_draw(std::uint64_t seed) {
    AugmentDraw d;
    d.flip_horizontal = uniform_int(seed, 0, 2) == 1;
    d.quarter_turns = static_cast<int>(uniform_int(seed, 1, 4));
    return d;
}

inline Image apply_augment(const Image& img, const AugmentDraw& d) {
    Image out = d.flip_horizontal ? flip_horizontal(img) : img;
    for (int t = 0; t < d.quarter_turns; ++t) out = rotate90(out);
    return out;
}

inline BlendPair augment(const BlendPair& pair, std::uint64_t seed) {
    const AugmentDraw d = augment_draw(seed);
    BlendPair out;
    out.input = apply_augment(pair.input, d);
    out.ground_truth = apply_augment(pair.ground_truth, d);
    out.texture_id = pair.texture_id;
    out.gt_source = pair.gt_source;
    return out;
}

// ----------------------------------------------------------------------------
// Manifest: images on disk plus one JSON line per pair.
// ----------------------------------------------------------------------------
struct SplitRatios {
    double train = 0.8;
    double validation = 0.17;
    double test = 0.03;
};

struct ManifestRecord {
    std::string input_path;
    std::string gt_path;
    std::string texture_id;
    std::string gt_source; // operator name or "external"
    std::string split;     // train | validation | test
};

// Split sizes: floor for train and test, remainder to validation.
inline std::vector<std::string> assign_splits(std::size_t n, std::uint64_t seed,
                                              const SplitRatios& r = {}) {
    const auto n_train = static_cast<std::size_t>(
        std::floor(r.train * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(
        std::floor(r.test * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::uint64_t counter = 0;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = uniform_int(seed, counter++, i);
        std::swap(order[i - 1], order[j]);
    }
    std::vector<std::string> split(n);
    for (std::size_t rank = 0; rank < n; ++rank)
        split[order[rank]] = rank < n_train              ? "train"
                             : rank < n - n_test         ? "validation"
                                                         : "test";
    return split;
}

// Writes NNNN_input.png / NNNN_gt.png plus manifest.jsonl into out_dir and
// returns the records (in input order, matching the file).  Same pairs and
// seed produce a byte-identical manifest.
inline std::vector<ManifestRecord> build_manifest(const std::vector<BlendPair>& pairs,
                                                  const std::string& out_dir,
                                                  std::uint64_t seed,
                                                  const SplitRatios& ratios = {}) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory '" + out_dir + "'");

    const auto splits = assign_splits(pairs.size(), seed, ratios);
    std::vector<ManifestRecord> records;
    records.reserve(pairs.size());

    const fs::path root(out_dir);
    std::ofstream manifest(root / "manifest.jsonl", std::ios::binary);
    if (!manifest)
        throw io_error("cannot open manifest for writing in '" + out_dir + "'");

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        char stem[16];
        std::snprintf(stem, sizeof stem, "%04zu", i);
        ManifestRecord rec;
        rec.input_path = std::string(stem) + "_input.png";
        rec.gt_path = std::string(stem) + "_gt.png";
        rec.texture_id = pairs[i].texture_id;
        rec.gt_source = pairs[i].gt_source ? pairs[i].gt_source->name : "external";
        rec.split = splits[i];
        save_image(pairs[i].input, (root / rec.input_path).string());
        save_image(pairs[i].ground_truth, (root / rec.gt_path).string());

        nlohmann::ordered_json line = {{"input_path", rec.input_path},
                                       {"gt_path", rec.gt_path},
                                       {"texture_id", rec.texture_id},
                                       {"gt_source", rec.gt_source},
                                       {"split", rec.split}};
        manifest << line.dump() << "\n";
        records.push_back(std::move(rec));
    }
    if (!manifest) throw io_error("manifest write failure in '" + out_dir + "'");
    return records;
}

} // namespace smoothkit

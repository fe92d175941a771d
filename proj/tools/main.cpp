// Command-line front end for the smoothing toolkit: operators, dataset
// synthesis, metric/loss auditing, and the desk-scale benchmark table.
//
// Exit codes: 0 success, 1 empty pipeline result, 2 bad arguments,
// 3 IO failure, 4 numerical failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <smoothkit/smoothkit.hpp>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace smoothkit;

namespace {

constexpr int kExitEmpty = 1;
constexpr int kExitArgs = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

// JSON has no infinity literal; infinite dB values travel as a string.
ordered_json json_real(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

void emit(const ordered_json& doc, const std::string& out_path) {
    const std::string text = doc.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + out_path + "'");
    out << text;
    if (!out) throw io_error("write failure on '" + out_path + "'");
}

double parse_real(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(what + ": '" + text + "' is not a number");
    }
    if (used != text.size())
        throw std::invalid_argument(what + ": '" + text + "' is not a number");
    return v;
}

// "key=value" -> pair; used by --param and --candidate.
std::pair<std::string, std::string> split_kv(const std::string& text,
                                             const std::string& what) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
        throw std::invalid_argument(what + ": expected key=value, got '" + text + "'");
    return {text.substr(0, eq), text.substr(eq + 1)};
}

OperatorSpec resolve_operator(const std::string& op_name, const std::string& preset_name,
                              const std::vector<std::string>& params) {
    OperatorSpec spec;
    if (!preset_name.empty()) spec = preset(preset_name);
    if (!op_name.empty()) {
        if (!preset_name.empty() && spec.name != op_name)
            throw std::invalid_argument("--op '" + op_name + "' conflicts with preset '" +
                                        preset_name + "' (" + spec.name + ")");
        spec.name = op_name;
    }
    if (spec.name.empty()) {
        std::string names;
        for (const auto& n : operator_names()) names += (names.empty() ? "" : ", ") + n;
        throw std::invalid_argument("no operator given: use --op or --preset (valid "
                                    "operators: " + names + ")");
    }
    for (const auto& p : params) {
        const auto [key, value] = split_kv(p, "--param");
        spec.params[key] = parse_real(value, "--param " + key);
    }
    return spec;
}

ordered_json params_json(const OperatorSpec& spec) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : spec.params) j[k] = v;
    return j;
}

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw io_error("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        for (auto& ch : ext) ch = static_cast<char>(std::tolower(ch));
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm")
            out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// smooth
// ---------------------------------------------------------------------------
struct SmoothArgs {
    std::string input, output, op, preset_name, out_dir;
    std::vector<std::string> params;
    int threads = 1;
};

int cmd_smooth(const SmoothArgs& a) {
    const OperatorSpec spec = resolve_operator(a.op, a.preset_name, a.params);
    ordered_json result = {{"schema", 1},
                           {"operator", spec.name},
                           {"params", params_json(spec)},
                           {"outputs", ordered_json::array()}};

    if (fs::is_directory(a.input)) {
        if (a.out_dir.empty())
            throw std::invalid_argument("directory input requires --out-dir");
        fs::create_directories(a.out_dir);
        const auto inputs = list_images(a.input);
        if (inputs.empty()) throw io_error("no images in '" + a.input + "'");
        std::vector<ordered_json> slots(inputs.size());
        parallel_for_index(inputs.size(), a.threads, [&](std::size_t i) {
            const Image img = load_image(inputs[i].string());
            ClampStats clamp;
            const Image out = apply_operator(spec, img, &clamp);
            const fs::path dst = fs::path(a.out_dir) / inputs[i].filename();
            save_image(out, dst.string());
            slots[i] = {{"path", dst.string()},
                        {"clipped_fraction", clamp.clipped_fraction},
                        {"max_excess", clamp.max_excess}};
        });
        for (auto& s : slots) result["outputs"].push_back(std::move(s));
    } else {
        if (a.output.empty())
            throw std::invalid_argument("file input requires an output path");
        const Image img = load_image(a.input);
        ClampStats clamp;
        const Image out = apply_operator(spec, img, &clamp);
        save_image(out, a.output);
        result["outputs"].push_back({{"path", a.output},
                                     {"clipped_fraction", clamp.clipped_fraction},
                                     {"max_excess", clamp.max_excess}});
    }
    emit(result, "");
    return 0;
}

// ---------------------------------------------------------------------------
// blend
// ---------------------------------------------------------------------------
struct BlendArgs {
    std::string gt, texture, output;
};

int cmd_blend(const BlendArgs& a) {
    const Image gt = load_image(a.gt);
    const Image texture = tile_texture(load_image(a.texture), gt.width, gt.height);
    double clamp_fraction = 0.0;
    const Image out = blend_texture(gt, texture, &clamp_fraction);
    save_image(out, a.output);
    emit({{"schema", 1},
          {"output", a.output},
          {"clamp_fraction", clamp_fraction}},
         "");
    return 0;
}

// ---------------------------------------------------------------------------
// screen
// ---------------------------------------------------------------------------
struct ScreenArgs {
    std::string original, out;
    std::vector<std::string> candidates; // op=path
    int window_size = 16, window_stride = 8;
    double threshold = 0.05, sobel_threshold = 0.1;
};

ordered_json screening_report_json(const ScreeningReport& report) {
    ordered_json j = {{"schema", 1},
                      {"structure_check", ScreeningReport::structure_check},
                      {"candidates", ordered_json::array()}};
    for (const auto& rec : report.candidates)
        j["candidates"].push_back(
            {{"operator", rec.op.name},
             {"params", params_json(rec.op)},
             {"passed", rec.smooth.pass},
             {"status", to_string(rec.smooth.status)},
             {"smooth_score", rec.smooth.score},
             {"smooth_std_term", rec.smooth.std_term},
             {"smooth_laplacian_term", rec.smooth.laplacian_term},
             {"windows_evaluated", rec.smooth.windows_evaluated},
             {"ssim_vs_original", rec.ssim_vs_original}});
    j["selected"] = report.selected
                        ? ordered_json(static_cast<std::int64_t>(*report.selected))
                        : ordered_json(nullptr);
    return j;
}

int cmd_screen(const ScreenArgs& a) {
    const Image original = load_image(a.original);
    std::vector<std::pair<OperatorSpec, Image>> candidates;
    for (const auto& c : a.candidates) {
        const auto [op_name, path] = split_kv(c, "--candidate");
        OperatorSpec spec;
        spec.name = op_name;
        candidates.emplace_back(spec, load_image(path));
    }
    const WindowSpec w{a.window_size, a.window_stride};
    const ScreeningReport report =
        screen_candidates(original, candidates, w, a.threshold, a.sobel_threshold);
    emit(screening_report_json(report), a.out);
    return 0;
}

// ---------------------------------------------------------------------------
// dataset build
// ---------------------------------------------------------------------------
struct DatasetArgs {
    std::string sources, textures, out;
    std::uint64_t seed = 0;
    int threads = 1;
    std::vector<std::string> ops = operator_names();
    std::vector<std::string> params; // op.key=value
    int window_size = 16, window_stride = 8;
    double threshold = 0.05, sobel_threshold = 0.1;
    double ratio_train = 0.8, ratio_val = 0.17, ratio_test = 0.03;
    bool augment_pairs = false;
};

int cmd_dataset_build(const DatasetArgs& a) {
    // Operator set with optional per-operator parameter overrides.
    std::vector<OperatorSpec> specs;
    for (const auto& name : a.ops) {
        OperatorSpec spec;
        spec.name = name;
        specs.push_back(spec);
    }
    for (const auto& p : a.params) {
        const auto [dotted, value] = split_kv(p, "--param");
        const auto dot = dotted.find('.');
        if (dot == std::string::npos)
            throw std::invalid_argument("--param: expected op.key=value, got '" + p + "'");
        const std::string op_name = dotted.substr(0, dot);
        bool found = false;
        for (auto& spec : specs)
            if (spec.name == op_name) {
                spec.params[dotted.substr(dot + 1)] =
                    parse_real(value, "--param " + dotted);
                found = true;
            }
        if (!found)
            throw std::invalid_argument("--param: operator '" + op_name +
                                        "' is not in --ops");
    }

    const auto sources = list_images(a.sources);
    const auto textures = list_images(a.textures);
    if (sources.empty()) throw io_error("no source images in '" + a.sources + "'");
    if (textures.empty()) throw io_error("no texture images in '" + a.textures + "'");

    const WindowSpec w{a.window_size, a.window_stride};

    // Per-source screening runs in parallel; every result lands in its own
    // slot so downstream assembly is order-stable for any thread count.
    struct SourceResult {
        ScreeningReport report;
        std::optional<Image> gt;
        std::optional<OperatorSpec> gt_source;
    };
    std::vector<SourceResult> screened(sources.size());
    parallel_for_index(sources.size(), a.threads, [&](std::size_t i) {
        const Image original = load_image(sources[i].string());
        std::vector<std::pair<OperatorSpec, Image>> candidates;
        for (const auto& spec : specs)
            candidates.emplace_back(spec, apply_operator(spec, original));
        SourceResult r;
        r.report =
            screen_candidates(original, candidates, w, a.threshold, a.sobel_threshold);
        if (r.report.selected) {
            r.gt = candidates[*r.report.selected].second;
            r.gt_source = candidates[*r.report.selected].first;
        }
        screened[i] = std::move(r);
    });

    fs::create_directories(fs::path(a.out) / "screening");
    for (std::size_t i = 0; i < sources.size(); ++i) {
        ordered_json j = screening_report_json(screened[i].report);
        j["source"] = sources[i].filename().string();
        char name[32];
        std::snprintf(name, sizeof name, "screening/%04zu.json", i);
        emit(j, (fs::path(a.out) / name).string());
    }

    // Blend every surviving ground truth with every texture.
    std::vector<BlendPair> pairs;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (!screened[i].gt) continue;
        const Image& gt = *screened[i].gt;
        for (const auto& tex_path : textures) {
            const Image texture =
                tile_texture(load_image(tex_path.string()), gt.width, gt.height);
            BlendPair pair;
            pair.input = blend_texture(gt, texture);
            pair.ground_truth = gt;
            pair.texture_id = tex_path.stem().string();
            pair.gt_source = screened[i].gt_source;
            if (a.augment_pairs)
                pair = augment(pair, hash_counter(a.seed, 0xA000 + pairs.size()));
            pairs.push_back(std::move(pair));
        }
    }

    const auto records =
        build_manifest(pairs, a.out, a.seed,
                       SplitRatios{a.ratio_train, a.ratio_val, a.ratio_test});

    std::size_t selected = 0;
    for (const auto& r : screened) selected += r.gt.has_value();
    emit({{"schema", 1},
          {"sources", sources.size()},
          {"sources_with_gt", selected},
          {"textures", textures.size()},
          {"pairs", records.size()},
          {"manifest", (fs::path(a.out) / "manifest.jsonl").string()}},
         "");
    if (pairs.empty()) {
        std::cerr << "dataset build: no candidate passed screening; "
                     "reports kept in " << a.out << "/screening\n";
        return kExitEmpty;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// metric
// ---------------------------------------------------------------------------
struct MetricArgs {
    std::string a, b, manifest, manifest_dir;
    int levels = 4;
    int threads = 1;
    double sobel_threshold = 0.1;
    int window_size = 16, window_stride = 8;
    double smooth_threshold = 0.05;
};

ordered_json metric_pair_json(const MetricArgs& cfg, const Image& ref,
                              const Image& candidate) {
    const Image gray =
        candidate.channels == 3 ? to_grayscale(candidate) : candidate;
    const auto st = smooth_test(gray, sobel_edges(gray, cfg.sobel_threshold),
                                WindowSpec{cfg.window_size, cfg.window_stride},
                                cfg.smooth_threshold);
    return {{"psnr", json_real(psnr(ref, candidate))},
            {"ssim", ssim(ref, candidate)},
            {"ms_ssim", multiscale_pooled_ssim(ref, candidate, cfg.levels)},
            {"smooth_score", st.windows_evaluated > 0 ? ordered_json(st.score)
                                                      : ordered_json(nullptr)},
            {"smooth_status", to_string(st.status)}};
}

std::vector<ManifestRecord> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open manifest '" + path + "'");
    std::vector<ManifestRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw io_error("manifest '" + path + "': bad JSON line " +
                           std::to_string(records.size() + 1) + ": " + e.what());
        }
        ManifestRecord rec;
        rec.input_path = j.at("input_path").get<std::string>();
        rec.gt_path = j.at("gt_path").get<std::string>();
        rec.texture_id = j.value("texture_id", "");
        rec.gt_source = j.value("gt_source", "");
        rec.split = j.value("split", "train");
        records.push_back(std::move(rec));
    }
    return records;
}

int cmd_metric(const MetricArgs& a) {
    if (!a.manifest.empty()) {
        const auto records = read_manifest(a.manifest);
        const fs::path root =
            a.manifest_dir.empty() ? fs::path(a.manifest).parent_path()
                                   : fs::path(a.manifest_dir);
        std::vector<ordered_json> slots(records.size());
        parallel_for_index(records.size(), a.threads, [&](std::size_t i) {
            const Image gt = load_image((root / records[i].gt_path).string());
            const Image input = load_image((root / records[i].input_path).string());
            ordered_json j = metric_pair_json(a, gt, input);
            j["input_path"] = records[i].input_path;
            slots[i] = std::move(j);
        });
        double sum_psnr = 0.0, sum_ssim = 0.0, sum_ms = 0.0;
        for (const auto& s : slots) {
            sum_psnr += s["psnr"].is_string()
                            ? std::numeric_limits<double>::infinity()
                            : s["psnr"].get<double>();
            sum_ssim += s["ssim"].get<double>();
            sum_ms += s["ms_ssim"].get<double>();
        }
        const double n = static_cast<double>(records.size());
        ordered_json doc = {{"schema", 1},
                            {"pairs", ordered_json::array()},
                            {"mean_psnr", json_real(sum_psnr / n)},
                            {"mean_ssim", sum_ssim / n},
                            {"mean_ms_ssim", sum_ms / n}};
        for (auto& s : slots) doc["pairs"].push_back(std::move(s));
        emit(doc, "");
        return 0;
    }
    if (a.a.empty() || a.b.empty())
        throw std::invalid_argument("metric: need --a and --b, or --manifest");
    const Image ref = load_image(a.a);
    const Image cand = load_image(a.b);
    ordered_json doc = {{"schema", 1}};
    doc.update(metric_pair_json(a, ref, cand));
    emit(doc, "");
    return 0;
}

// ---------------------------------------------------------------------------
// loss
// ---------------------------------------------------------------------------
struct LossArgs {
    std::string s0, s1, gt, edges, edge_prob;
    std::string anchor, positive;
    std::vector<std::string> negatives;
    std::string seg_probs, seg_labels;
    double lambda_e = 0.001, lambda_c = 1.0, lambda_seg = 1.0;
    double alpha = 0.3, beta = 0.3;
    std::string negative_mode = "mean";
    int levels = 4;
};

EdgeMap edge_map_from_image(const Image& img) {
    EdgeMap m(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            m.at(x, y) = img.at(x, y, 0) > 0.5f ? 1 : 0;
    return m;
}

int cmd_loss(const LossArgs& a) {
    LossParts parts;
    ordered_json provided = ordered_json::object();

    std::optional<Image> gt;
    if (!a.gt.empty()) gt = load_image(a.gt);
    std::optional<EdgeMap> edges;
    if (!a.edges.empty()) {
        Image e = load_image(a.edges);
        edges = edge_map_from_image(e.channels == 3 ? to_grayscale(e) : e);
    }

    provided["edge"] = false;
    if (!a.edge_prob.empty()) {
        if (!edges) throw std::invalid_argument("loss: --edge-prob requires --edges");
        Image p = load_image(a.edge_prob);
        if (p.channels == 3) p = to_grayscale(p);
        ScalarField pred(p.width, p.height);
        for (int y = 0; y < p.height; ++y)
            for (int x = 0; x < p.width; ++x) pred.at(x, y) = p.at(x, y, 0);
        parts.edge = edge_loss(pred, *edges);
        provided["edge"] = true;
    }

    auto prediction_terms = [&](const std::string& path, double& re_part,
                                double& dtv_part, const char* which) {
        if (path.empty()) return false;
        if (!gt)
            throw std::invalid_argument(std::string("loss: --") + which +
                                        " requires --gt");
        const Image s = load_image(path);
        re_part = reconstruction_loss(s, *gt, a.levels);
        if (edges) dtv_part = dtv_loss(s, *gt, *edges);
        return true;
    };
    provided["re_s0"] = prediction_terms(a.s0, parts.re_s0, parts.dtv_s0, "s0");
    provided["re_s1"] = prediction_terms(a.s1, parts.re_s1, parts.dtv_s1, "s1");

    provided["contrastive"] = false;
    if (!a.anchor.empty() || !a.positive.empty() || !a.negatives.empty()) {
        if (a.anchor.empty() || a.positive.empty() || a.negatives.empty())
            throw std::invalid_argument(
                "loss: contrastive term needs --anchor, --positive, and at least "
                "one --negative");
        std::vector<FeatureMap> negs;
        for (const auto& n : a.negatives) negs.push_back(load_features(n));
        ContrastiveConfig cfg;
        cfg.alpha = a.alpha;
        cfg.beta = a.beta;
        if (a.negative_mode == "mean")
            cfg.negative_mode = NegativeMode::mean;
        else if (a.negative_mode == "min")
            cfg.negative_mode = NegativeMode::min;
        else
            throw std::invalid_argument("loss: --negative-mode must be mean or min");
        parts.contrastive =
            contrastive_loss(load_features(a.anchor), load_features(a.positive),
                             negs, cfg)
                .loss;
        provided["contrastive"] = true;
    }

    provided["seg"] = false;
    if (!a.seg_probs.empty() || !a.seg_labels.empty()) {
        if (a.seg_probs.empty() || a.seg_labels.empty())
            throw std::invalid_argument(
                "loss: semantic term needs --seg-probs and --seg-labels");
        const FeatureMap probs_t = load_features(a.seg_probs);
        ClassProbMap probs(probs_t.width, probs_t.height, probs_t.channels);
        for (int k = 0; k < probs.num_classes; ++k)
            for (int y = 0; y < probs.height; ++y)
                for (int x = 0; x < probs.width; ++x)
                    probs.at(x, y, k) = probs_t.at(k, y, x);
        Image li = load_image(a.seg_labels);
        if (li.channels != 1)
            throw std::invalid_argument("loss: --seg-labels must be single-channel");
        LabelMap labels(li.width, li.height);
        for (int y = 0; y < li.height; ++y)
            for (int x = 0; x < li.width; ++x) {
                const int v = static_cast<int>(std::lround(li.at(x, y, 0) * 255.0f));
                labels.at(x, y) = v == 255 ? LabelMap::ignore_label : v;
            }
        parts.seg = seg_cross_entropy(probs, labels);
        provided["seg"] = true;
    }

    const LossWeights weights{a.lambda_e, a.lambda_c, a.lambda_seg};
    const TotalLossBreakdown b = total_loss(parts, weights);
    emit({{"schema", 1},
          {"provided", provided},
          {"parts",
           {{"edge", parts.edge},
            {"re_s0", parts.re_s0},
            {"re_s1", parts.re_s1},
            {"dtv_s0", parts.dtv_s0},
            {"dtv_s1", parts.dtv_s1},
            {"contrastive", parts.contrastive},
            {"seg", parts.seg}}},
          {"weights",
           {{"lambda_e", weights.lambda_e},
            {"lambda_c", weights.lambda_c},
            {"lambda_seg", weights.lambda_seg}}},
          {"weighted",
           {{"edge", b.edge_weighted},
            {"re_s0", b.re_s0},
            {"re_s1", b.re_s1},
            {"dtv_s0", b.dtv_s0},
            {"dtv_s1", b.dtv_s1},
            {"contrastive", b.contrastive_weighted},
            {"seg", b.seg_weighted}}},
          {"total", b.total}},
         "");
    return 0;
}

// ---------------------------------------------------------------------------
// features extract / gram / closs
// ---------------------------------------------------------------------------
struct FeaturesArgs {
    std::string input, output;
    std::vector<double> scales = {1.0, 2.0, 4.0};
    bool no_raw = false, no_gaussian = false, no_dx = false, no_dy = false,
         no_log = false;
};

int cmd_features_extract(const FeaturesArgs& a) {
    FilterBankConfig bank;
    bank.scales = a.scales;
    bank.include_raw = !a.no_raw;
    bank.gaussian = !a.no_gaussian;
    bank.derivative_x = !a.no_dx;
    bank.derivative_y = !a.no_dy;
    bank.laplacian_of_gaussian = !a.no_log;
    const FeatureMap f = extract_features(load_image(a.input), bank);
    save_features(f, a.output);
    emit({{"schema", 1},
          {"output", a.output},
          {"channels", f.channels},
          {"height", f.height},
          {"width", f.width}},
         "");
    return 0;
}

struct GramArgs {
    std::string input, other, out;
};

int cmd_gram(const GramArgs& a) {
    const FeatureMap f = load_features(a.input);
    const GramMatrix g = gram(f);
    if (!a.other.empty()) {
        const FeatureMap f2 = load_features(a.other);
        emit({{"schema", 1},
              {"gram_distance", gram_distance(g, gram(f2))},
              {"expectation_distance", expectation_distance(f, f2)}},
             a.out);
        return 0;
    }
    ordered_json matrix = ordered_json::array();
    for (int i = 0; i < g.size; ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < g.size; ++j) row.push_back(g.at(i, j));
        matrix.push_back(std::move(row));
    }
    emit({{"schema", 1}, {"size", g.size}, {"matrix", matrix}}, a.out);
    return 0;
}

struct ClossArgs {
    std::string anchor, positive;
    std::vector<std::string> negatives;
    double alpha = 0.3, beta = 0.3;
    std::string mode = "mean";
};

int cmd_closs(const ClossArgs& a) {
    ContrastiveConfig cfg;
    cfg.alpha = a.alpha;
    cfg.beta = a.beta;
    if (a.mode == "mean")
        cfg.negative_mode = NegativeMode::mean;
    else if (a.mode == "min")
        cfg.negative_mode = NegativeMode::min;
    else
        throw std::invalid_argument("closs: --mode must be mean or min");
    std::vector<FeatureMap> negs;
    for (const auto& n : a.negatives) negs.push_back(load_features(n));
    const ContrastiveBreakdown b = contrastive_loss(
        load_features(a.anchor), load_features(a.positive), negs, cfg);
    ordered_json per_neg = ordered_json::array();
    for (const auto& t : b.per_negative)
        per_neg.push_back({{"d_gram_neg", t.d_gram_neg},
                           {"d_exp_neg", t.d_exp_neg},
                           {"gram_term", t.gram_term},
                           {"exp_term", t.exp_term}});
    emit({{"schema", 1},
          {"loss", b.loss},
          {"d_gram_pos", b.d_gram_pos},
          {"d_exp_pos", b.d_exp_pos},
          {"negatives", per_neg}},
         "");
    return 0;
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------
struct BenchmarkArgs {
    std::string manifest, manifest_dir, out, text_out;
    std::vector<std::string> ops = operator_names();
    std::string split = "all";
    std::uint64_t seed = 0;
    int threads = 1;
};

int cmd_benchmark(const BenchmarkArgs& a) {
    auto all_records = read_manifest(a.manifest);
    const fs::path root = a.manifest_dir.empty()
                              ? fs::path(a.manifest).parent_path()
                              : fs::path(a.manifest_dir);
    std::vector<ManifestRecord> records;
    for (auto& r : all_records)
        if (a.split == "all" || r.split == a.split) records.push_back(std::move(r));
    if (records.empty())
        throw io_error("benchmark: no manifest records for split '" + a.split + "'");

    std::vector<OperatorSpec> specs;
    for (const auto& name : a.ops) {
        OperatorSpec spec;
        spec.name = name;
        specs.push_back(spec);
    }

    struct PairScores {
        bool ok = false;
        std::string warning;
        std::vector<double> psnr_by_op, ssim_by_op; // index 0 = Original
    };
    std::vector<PairScores> slots(records.size());
    parallel_for_index(records.size(), a.threads, [&](std::size_t i) {
        PairScores& s = slots[i];
        Image input, gt;
        try {
            input = load_image((root / records[i].input_path).string());
            gt = load_image((root / records[i].gt_path).string());
        } catch (const io_error& e) {
            s.warning = e.what();
            return;
        }
        s.psnr_by_op.push_back(psnr(gt, input));
        s.ssim_by_op.push_back(ssim(gt, input));
        for (const auto& spec : specs) {
            const Image out = apply_operator(spec, input);
            s.psnr_by_op.push_back(psnr(gt, out));
            s.ssim_by_op.push_back(ssim(gt, out));
        }
        s.ok = true;
    });

    std::vector<std::string> warnings;
    std::size_t used = 0;
    const std::size_t n_ops = specs.size() + 1;
    std::vector<double> psnr_sum(n_ops, 0.0), ssim_sum(n_ops, 0.0);
    for (const auto& s : slots) {
        if (!s.ok) {
            warnings.push_back(s.warning);
            continue;
        }
        ++used;
        for (std::size_t k = 0; k < n_ops; ++k) {
            psnr_sum[k] += s.psnr_by_op[k];
            ssim_sum[k] += s.ssim_by_op[k];
        }
    }
    for (const auto& warning : warnings)
        std::cerr << "benchmark: skipped pair: " << warning << "\n";
    if (used == 0) throw io_error("benchmark: every manifest pair failed to load");

    struct Row {
        std::string name;
        double mean_psnr, mean_ssim;
    };
    std::vector<Row> rows;
    rows.push_back({"Original", psnr_sum[0] / used, ssim_sum[0] / used});
    for (std::size_t k = 0; k < specs.size(); ++k)
        rows.push_back(
            {specs[k].name, psnr_sum[k + 1] / used, ssim_sum[k + 1] / used});
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& x, const Row& y) { return x.mean_ssim > y.mean_ssim; });

    ordered_json doc = {{"schema", 1},
                        {"manifest", a.manifest},
                        {"split", a.split},
                        {"seed", a.seed},
                        {"pairs_used", used},
                        {"rows", ordered_json::array()},
                        {"warnings", warnings}};
    for (const auto& r : rows)
        doc["rows"].push_back({{"operator", r.name},
                               {"mean_psnr", json_real(r.mean_psnr)},
                               {"mean_ssim", r.mean_ssim}});
    emit(doc, a.out);

    auto format_table = [&] {
        std::string text = "operator          mean_psnr    mean_ssim\n";
        char line[96];
        for (const auto& r : rows) {
            if (std::isinf(r.mean_psnr))
                std::snprintf(line, sizeof line, "%-16s %10s %12.4f\n",
                              r.name.c_str(), "inf", r.mean_ssim);
            else
                std::snprintf(line, sizeof line, "%-16s %10.4f %12.4f\n",
                              r.name.c_str(), r.mean_psnr, r.mean_ssim);
            text += line;
        }
        return text;
    };
    if (!a.text_out.empty()) {
        std::ofstream out(a.text_out, std::ios::binary);
        if (!out) throw io_error("cannot open '" + a.text_out + "'");
        out << format_table();
    } else if (!a.out.empty()) {
        std::cout << format_table();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"edge-preserving smoothing toolkit: operators, dataset "
                 "synthesis, metrics, and loss audits"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read defaults from an INI/TOML config file");
    app.get_config_formatter_base()->valueSeparator('=');

    SmoothArgs smooth_args;
    auto* smooth_cmd = app.add_subcommand("smooth", "apply a smoothing operator");
    smooth_cmd->add_option("input", smooth_args.input, "input image or directory")
        ->required();
    smooth_cmd->add_option("output", smooth_args.output, "output image path");
    smooth_cmd->add_option("--op", smooth_args.op, "operator name");
    smooth_cmd->add_option("--preset", smooth_args.preset_name, "parameter preset");
    smooth_cmd->add_option("--param", smooth_args.params,
                           "operator parameter key=value (repeatable)");
    smooth_cmd->add_option("--out-dir", smooth_args.out_dir,
                           "output directory for directory input");
    smooth_cmd->add_option("--threads", smooth_args.threads, "worker threads");

    BlendArgs blend_args;
    auto* blend_cmd =
        app.add_subcommand("blend", "add a zero-mean texture layer to an image");
    blend_cmd->add_option("--gt", blend_args.gt, "clean image")->required();
    blend_cmd->add_option("--texture", blend_args.texture, "texture image")
        ->required();
    blend_cmd->add_option("output", blend_args.output, "output path")->required();

    ScreenArgs screen_args;
    auto* screen_cmd = app.add_subcommand(
        "screen", "smooth-test and rank candidate ground truths");
    screen_cmd->add_option("--original", screen_args.original, "source image")
        ->required();
    screen_cmd
        ->add_option("--candidate", screen_args.candidates,
                     "candidate as operator=path (repeatable)")
        ->required();
    screen_cmd->add_option("--threshold", screen_args.threshold,
                           "smooth-test threshold");
    screen_cmd->add_option("--sobel-threshold", screen_args.sobel_threshold,
                           "edge threshold for the candidate's edge map");
    screen_cmd->add_option("--window-size", screen_args.window_size, "window size");
    screen_cmd->add_option("--window-stride", screen_args.window_stride,
                           "window stride");
    screen_cmd->add_option("--out", screen_args.out, "write report JSON here");

    DatasetArgs dataset_args;
    auto* dataset_cmd = app.add_subcommand("dataset", "dataset pipelines");
    dataset_cmd->require_subcommand(1);
    auto* build_cmd = dataset_cmd->add_subcommand(
        "build", "candidates -> screening -> blending -> manifest");
    build_cmd->add_option("--sources", dataset_args.sources, "clean source images")
        ->required();
    build_cmd->add_option("--textures", dataset_args.textures, "texture images")
        ->required();
    build_cmd->add_option("--out", dataset_args.out, "output directory")->required();
    build_cmd->add_option("--seed", dataset_args.seed, "random seed")->required();
    build_cmd->add_option("--threads", dataset_args.threads, "worker threads");
    build_cmd->add_option("--ops", dataset_args.ops, "operator names to try");
    build_cmd->add_option("--param", dataset_args.params,
                          "per-operator parameter op.key=value (repeatable)");
    build_cmd->add_option("--threshold", dataset_args.threshold,
                          "smooth-test threshold");
    build_cmd->add_option("--sobel-threshold", dataset_args.sobel_threshold,
                          "candidate edge threshold");
    build_cmd->add_option("--window-size", dataset_args.window_size, "window size");
    build_cmd->add_option("--window-stride", dataset_args.window_stride,
                          "window stride");
    build_cmd->add_option("--ratio-train", dataset_args.ratio_train, "train ratio");
    build_cmd->add_option("--ratio-val", dataset_args.ratio_val,
                          "validation ratio");
    build_cmd->add_option("--ratio-test", dataset_args.ratio_test, "test ratio");
    build_cmd->add_flag("--augment", dataset_args.augment_pairs,
                        "apply a seeded flip/rotation per pair");

    MetricArgs metric_args;
    auto* metric_cmd =
        app.add_subcommand("metric", "PSNR/SSIM/multi-scale SSIM/smoothness");
    metric_cmd->add_option("--a", metric_args.a, "reference image");
    metric_cmd->add_option("--b", metric_args.b, "candidate image");
    metric_cmd->add_option("--manifest", metric_args.manifest,
                           "JSONL manifest for batch mode (gt vs input per record)");
    metric_cmd->add_option("--manifest-dir", metric_args.manifest_dir,
                           "base directory for manifest paths");
    metric_cmd->add_option("--levels", metric_args.levels, "pyramid levels");
    metric_cmd->add_option("--threads", metric_args.threads, "worker threads");

    LossArgs loss_args;
    auto* loss_cmd =
        app.add_subcommand("loss", "audit supervision terms and their total");
    loss_cmd->add_option("--s0", loss_args.s0, "first prediction image");
    loss_cmd->add_option("--s1", loss_args.s1, "second prediction image");
    loss_cmd->add_option("--gt", loss_args.gt, "target image");
    loss_cmd->add_option("--edges", loss_args.edges,
                         "edge ground truth (mask image, >0.5 = edge)");
    loss_cmd->add_option("--edge-prob", loss_args.edge_prob,
                         "edge probability map (grayscale image)");
    loss_cmd->add_option("--anchor", loss_args.anchor, "anchor feature tensor");
    loss_cmd->add_option("--positive", loss_args.positive,
                         "positive feature tensor");
    loss_cmd->add_option("--negative", loss_args.negatives,
                         "negative feature tensor (repeatable)");
    loss_cmd->add_option("--seg-probs", loss_args.seg_probs,
                         "class probabilities as a K-channel feature tensor");
    loss_cmd->add_option("--seg-labels", loss_args.seg_labels,
                         "label image (gray level = class id, 255 = ignore)");
    loss_cmd->add_option("--lambda-e", loss_args.lambda_e, "edge term weight");
    loss_cmd->add_option("--lambda-c", loss_args.lambda_c,
                         "contrastive term weight");
    loss_cmd->add_option("--lambda-seg", loss_args.lambda_seg,
                         "semantic term weight");
    loss_cmd->add_option("--alpha", loss_args.alpha, "Gram margin");
    loss_cmd->add_option("--beta", loss_args.beta, "expectation margin");
    loss_cmd->add_option("--negative-mode", loss_args.negative_mode,
                         "negative aggregation: mean|min");
    loss_cmd->add_option("--levels", loss_args.levels,
                         "reconstruction pyramid levels");

    FeaturesArgs features_args;
    auto* features_cmd = app.add_subcommand("features", "feature tensors");
    features_cmd->require_subcommand(1);
    auto* extract_cmd = features_cmd->add_subcommand(
        "extract", "run the deterministic filter bank");
    extract_cmd->add_option("--in", features_args.input, "input image")->required();
    extract_cmd->add_option("--out", features_args.output, "output .fmap path")
        ->required();
    extract_cmd->add_option("--scales", features_args.scales, "bank scales");
    extract_cmd->add_flag("--no-raw", features_args.no_raw,
                          "drop the raw grayscale channel");
    extract_cmd->add_flag("--no-gaussian", features_args.no_gaussian,
                          "drop the Gaussian channels");
    extract_cmd->add_flag("--no-dx", features_args.no_dx,
                          "drop the x-derivative channels");
    extract_cmd->add_flag("--no-dy", features_args.no_dy,
                          "drop the y-derivative channels");
    extract_cmd->add_flag("--no-log", features_args.no_log,
                          "drop the Laplacian-of-Gaussian channels");

    GramArgs gram_args;
    auto* gram_cmd =
        app.add_subcommand("gram", "Gram matrix of a feature tensor");
    gram_cmd->add_option("--in", gram_args.input, "feature tensor")->required();
    gram_cmd->add_option("--other", gram_args.other,
                         "second tensor: print distances instead of the matrix");
    gram_cmd->add_option("--out", gram_args.out, "write JSON here");

    ClossArgs closs_args;
    auto* closs_cmd = app.add_subcommand("closs", "triplet contrastive loss");
    closs_cmd->add_option("--anchor", closs_args.anchor, "anchor tensor")
        ->required();
    closs_cmd->add_option("--positive", closs_args.positive, "positive tensor")
        ->required();
    closs_cmd->add_option("--negative", closs_args.negatives,
                          "negative tensor (repeatable)")
        ->required();
    closs_cmd->add_option("--alpha", closs_args.alpha, "Gram margin");
    closs_cmd->add_option("--beta", closs_args.beta, "expectation margin");
    closs_cmd->add_option("--mode", closs_args.mode, "mean|min");

    BenchmarkArgs bench_args;
    auto* bench_cmd = app.add_subcommand(
        "benchmark", "per-operator mean PSNR/SSIM over a manifest");
    bench_cmd->add_option("--manifest", bench_args.manifest, "JSONL manifest")
        ->required();
    bench_cmd->add_option("--manifest-dir", bench_args.manifest_dir,
                          "base directory for manifest paths");
    bench_cmd->add_option("--ops", bench_args.ops, "operators to benchmark");
    bench_cmd->add_option("--split", bench_args.split,
                          "manifest split to use (train|validation|test|all)");
    bench_cmd->add_option("--out", bench_args.out, "write JSON report here");
    bench_cmd->add_option("--text", bench_args.text_out,
                          "write the aligned text table here");
    bench_cmd->add_option("--seed", bench_args.seed,
                          "seed echoed into the report");
    bench_cmd->add_option("--threads", bench_args.threads, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitArgs;
    }

    try {
        if (app.got_subcommand(smooth_cmd)) return cmd_smooth(smooth_args);
        if (app.got_subcommand(blend_cmd)) return cmd_blend(blend_args);
        if (app.got_subcommand(screen_cmd)) return cmd_screen(screen_args);
        if (app.got_subcommand(dataset_cmd)) return cmd_dataset_build(dataset_args);
        if (app.got_subcommand(metric_cmd)) return cmd_metric(metric_args);
        if (app.got_subcommand(loss_cmd)) return cmd_loss(loss_args);
        if (app.got_subcommand(features_cmd))
            return cmd_features_extract(features_args);
        if (app.got_subcommand(gram_cmd)) return cmd_gram(gram_args);
        if (app.got_subcommand(closs_cmd)) return cmd_closs(closs_args);
        if (app.got_subcommand(bench_cmd)) return cmd_benchmark(bench_args);
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitArgs;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}

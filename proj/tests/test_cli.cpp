#include <smoothkit/smoothkit.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "helpers.hpp"

using namespace smoothkit;
using Catch::Matchers::ContainsSubstring;
using nlohmann::json;
using testkit::TempDir;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the toolkit binary with the given arguments, capturing the exit code
// and both output streams through files in the scratch directory.
int run_cli(const std::string& args, const TempDir& tmp,
            std::string* out_text = nullptr, std::string* err_text = nullptr) {
  static int call = 0;
  const std::string out_path = tmp.str("cli_stdout_" + std::to_string(call));
  const std::string err_path = tmp.str("cli_stderr_" + std::to_string(call));
  ++call;
  const std::string cmd = std::string("\"") + SMOOTHKIT_CLI_PATH + "\" " + args +
                          " > " + out_path + " 2> " + err_path;
  const int raw = std::system(cmd.c_str());
  REQUIRE(raw != -1);
  if (out_text) *out_text = read_text(out_path);
  if (err_text) *err_text = read_text(err_path);
  REQUIRE(WIFEXITED(raw));
  return WEXITSTATUS(raw);
}

json run_cli_json(const std::string& args, const TempDir& tmp, int expected_exit = 0) {
  std::string out;
  const int code = run_cli(args, tmp, &out);
  REQUIRE(code == expected_exit);
  return json::parse(out);
}

// two flat color regions split at x=24; flat areas make the smooth test
// trivially passable while the step keeps SSIM comparisons meaningful
Image step_image() {
  Image img(32, 32, 3);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const bool left = x < 24;
      img.at(x, y, 0) = left ? 0.2f : 0.8f;
      img.at(x, y, 1) = left ? 0.3f : 0.7f;
      img.at(x, y, 2) = left ? 0.4f : 0.6f;
    }
  return img;
}

Image checker_texture(float lo, float hi) {
  Image img(8, 8, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      img.at(x, y, 0) = ((x / 2 + y / 2) % 2 == 0) ? hi : lo;
  return img;
}

}  // namespace

TEST_CASE("command line exit codes") {
  TempDir tmp;
  save_image(step_image(), tmp.str("in.png"));

  SECTION("unknown operator fails with the argument code and lists the choices") {
    std::string err;
    const int code = run_cli("smooth " + tmp.str("in.png") + " " +
                                 tmp.str("out.png") + " --op warp",
                             tmp, nullptr, &err);
    CHECK(code == 2);
    CHECK_THAT(err, ContainsSubstring("warp"));
    CHECK_THAT(err, ContainsSubstring("rolling_guidance"));
  }

  SECTION("missing operator selection fails with the argument code") {
    std::string err;
    const int code = run_cli(
        "smooth " + tmp.str("in.png") + " " + tmp.str("out.png"), tmp, nullptr, &err);
    CHECK(code == 2);
    CHECK_THAT(err, ContainsSubstring("valid operators"));
  }

  SECTION("unknown preset fails with the argument code") {
    std::string err;
    const int code = run_cli("smooth " + tmp.str("in.png") + " " +
                                 tmp.str("out.png") + " --preset fig9-xx",
                             tmp, nullptr, &err);
    CHECK(code == 2);
    CHECK_THAT(err, ContainsSubstring("fig9-xx"));
  }

  SECTION("missing input file fails with the IO code and names the path") {
    std::string err;
    const int code = run_cli("smooth " + tmp.str("absent.png") + " " +
                                 tmp.str("out.png") + " --op bilateral",
                             tmp, nullptr, &err);
    CHECK(code == 3);
    CHECK_THAT(err, ContainsSubstring("absent.png"));
  }

  SECTION("directory input without an output directory fails with the argument code") {
    std::string err;
    const int code = run_cli("smooth " + tmp.path().string() + " --op bilateral",
                             tmp, nullptr, &err);
    CHECK(code == 2);
    CHECK_THAT(err, ContainsSubstring("--out-dir"));
  }

  SECTION("numerical dead ends fail with the numeric code") {
    // a label map that ignores every pixel leaves nothing to average
    FeatureMap probs(2, 8, 8);
    for (auto& v : probs.data) v = 0.5f;
    save_features(probs, tmp.str("probs.fmap"));
    save_image(Image(8, 8, 1, 1.0f), tmp.str("ignore.png"));
    std::string err;
    const int code = run_cli("loss --seg-probs " + tmp.str("probs.fmap") +
                                 " --seg-labels " + tmp.str("ignore.png"),
                             tmp, nullptr, &err);
    CHECK(code == 4);
    CHECK_THAT(err, ContainsSubstring("ignored"));
  }

  SECTION("unknown subcommands fail with the argument code") {
    const int code = run_cli("frobnicate", tmp);
    CHECK(code == 2);
  }

  SECTION("help exits cleanly") {
    std::string out;
    const int code = run_cli("--help", tmp, &out);
    CHECK(code == 0);
    CHECK_THAT(out, ContainsSubstring("smooth"));
    CHECK_THAT(out, ContainsSubstring("benchmark"));
  }
}

TEST_CASE("smoothing from the command line") {
  TempDir tmp;
  const Image input = step_image();
  save_image(input, tmp.str("in.png"));

  SECTION("identity configuration round-trips every pixel") {
    json j = run_cli_json("smooth " + tmp.str("in.png") + " " + tmp.str("out.png") +
                              " --op l0 --param lambda=0",
                          tmp);
    CHECK(j["schema"] == 1);
    CHECK(j["operator"] == "l0");
    CHECK(j["params"]["lambda"] == 0.0);
    REQUIRE(j["outputs"].size() == 1);
    CHECK(j["outputs"][0]["path"] == tmp.str("out.png"));
    CHECK(j["outputs"][0]["clipped_fraction"] == 0.0);
    CHECK(j["outputs"][0]["max_excess"] == 0.0);

    const Image in_px = load_image(tmp.str("in.png"));
    const Image out_px = load_image(tmp.str("out.png"));
    REQUIRE(in_px.same_shape(out_px));
    CHECK(in_px.data == out_px.data);
  }

  SECTION("presets fill in the documented parameters") {
    json j = run_cli_json("smooth " + tmp.str("in.png") + " " + tmp.str("rtv.png") +
                              " --preset fig1-rtv",
                          tmp);
    CHECK(j["operator"] == "rtv");
    CHECK(j["params"]["lambda"] == 0.01);
    CHECK(j["params"]["sigma"] == 3.0);
    CHECK(j["params"]["eps_s"] == 0.02);
    CHECK(j["params"]["iters"] == 3.0);
  }

  SECTION("an operator name conflicting with the preset is rejected") {
    std::string err;
    const int code = run_cli("smooth " + tmp.str("in.png") + " " +
                                 tmp.str("out.png") + " --preset fig1-rtv --op l0",
                             tmp, nullptr, &err);
    CHECK(code == 2);
    CHECK_THAT(err, ContainsSubstring("conflicts"));
  }

  SECTION("directory input fans out to the output directory") {
    save_image(input, tmp.str("in2.png"));
    REQUIRE(std::system(("mkdir -p " + tmp.str("batch")).c_str()) == 0);
    REQUIRE(std::system(("cp " + tmp.str("in.png") + " " + tmp.str("batch/a.png"))
                            .c_str()) == 0);
    REQUIRE(std::system(("cp " + tmp.str("in2.png") + " " + tmp.str("batch/b.png"))
                            .c_str()) == 0);
    json j = run_cli_json("smooth " + tmp.str("batch") + " --op bilateral" +
                              " --out-dir " + tmp.str("smoothed"),
                          tmp);
    REQUIRE(j["outputs"].size() == 2);
    CHECK(j["outputs"][0]["path"] == tmp.str("smoothed/a.png"));
    CHECK(j["outputs"][1]["path"] == tmp.str("smoothed/b.png"));
    CHECK(load_image(tmp.str("smoothed/a.png")).width == 32);
  }

  SECTION("config files provide defaults that the command line overrides") {
    {
      std::ofstream cfg(tmp.str("defaults.ini"));
      cfg << "[smooth]\nop=l0\n";
    }
    json from_cfg = run_cli_json("--config " + tmp.str("defaults.ini") + " smooth " +
                                     tmp.str("in.png") + " " + tmp.str("o1.png") +
                                     " --param lambda=0",
                                 tmp);
    CHECK(from_cfg["operator"] == "l0");

    json overridden = run_cli_json("--config " + tmp.str("defaults.ini") + " smooth " +
                                       tmp.str("in.png") + " " + tmp.str("o2.png") +
                                       " --op bilateral",
                                   tmp);
    CHECK(overridden["operator"] == "bilateral");
  }
}

TEST_CASE("blending and screening from the command line") {
  TempDir tmp;

  SECTION("texture blending preserves geometry and reports clamping") {
    save_image(Image(32, 32, 3, 0.5f), tmp.str("gt.png"));
    save_image(checker_texture(0.45f, 0.55f), tmp.str("tex.png"));
    json j = run_cli_json("blend --gt " + tmp.str("gt.png") + " --texture " +
                              tmp.str("tex.png") + " " + tmp.str("blended.png"),
                          tmp);
    CHECK(j["schema"] == 1);
    CHECK(j["output"] == tmp.str("blended.png"));
    CHECK(j["clamp_fraction"] == 0.0);
    const Image blended = load_image(tmp.str("blended.png"));
    CHECK(blended.width == 32);
    CHECK(blended.height == 32);
    CHECK(mean_intensity(to_grayscale(blended)) == Catch::Approx(0.5).margin(0.01));
  }

  SECTION("screening report ranks the candidates") {
    const Image original = step_image();
    save_image(original, tmp.str("orig.png"));
    save_image(original, tmp.str("cand_same.png"));
    save_image(testkit::random_image(32, 32, 3, 711), tmp.str("cand_noise.png"));
    std::string out;
    const int code =
        run_cli("screen --original " + tmp.str("orig.png") + " --candidate bilateral=" +
                    tmp.str("cand_same.png") + " --candidate guided=" +
                    tmp.str("cand_noise.png") + " --out " + tmp.str("report.json"),
                tmp, &out);
    REQUIRE(code == 0);
    json j = json::parse(read_text(tmp.str("report.json")));
    CHECK(j["schema"] == 1);
    CHECK(j["structure_check"].is_string());
    REQUIRE(j["candidates"].size() == 2);
    CHECK(j["candidates"][0]["operator"] == "bilateral");
    CHECK(j["candidates"][0]["passed"] == true);
    CHECK(j["candidates"][0]["ssim_vs_original"].get<double>() ==
          Catch::Approx(1.0).margin(1e-9));
    CHECK(j["candidates"][1]["passed"] == false);
    CHECK(j["selected"] == 0);
  }
}

TEST_CASE("metrics from the command line") {
  TempDir tmp;
  const Image a = step_image();
  save_image(a, tmp.str("a.png"));
  save_image(Image(32, 32, 3, 0.5f), tmp.str("flat.png"));

  SECTION("identical pair: infinite dB travels as a string") {
    json j = run_cli_json("metric --a " + tmp.str("a.png") + " --b " + tmp.str("a.png"),
                          tmp);
    CHECK(j["schema"] == 1);
    REQUIRE(j["psnr"].is_string());
    CHECK(j["psnr"] == "inf");
    CHECK(j["ssim"].get<double>() == Catch::Approx(1.0).margin(1e-9));
    CHECK(j["ms_ssim"].get<double>() == Catch::Approx(4.0).margin(1e-6));
    CHECK(j["smooth_status"].is_string());
  }

  SECTION("distinct pair: finite scores") {
    json j = run_cli_json(
        "metric --a " + tmp.str("a.png") + " --b " + tmp.str("flat.png"), tmp);
    REQUIRE(j["psnr"].is_number());
    CHECK(j["psnr"].get<double>() > 0.0);
    CHECK(j["ssim"].get<double>() < 1.0);
  }

  SECTION("manifest batch mode aggregates the pairs") {
    {
      std::ofstream m(tmp.str("manifest.jsonl"));
      m << R"({"input_path":"flat.png","gt_path":"a.png","texture_id":"t0","gt_source":"none","split":"train"})"
        << "\n";
      m << R"({"input_path":"a.png","gt_path":"a.png","texture_id":"t1","gt_source":"none","split":"validation"})"
        << "\n";
    }
    json j = run_cli_json("metric --manifest " + tmp.str("manifest.jsonl"), tmp);
    REQUIRE(j["pairs"].size() == 2);
    CHECK(j["pairs"][0]["input_path"] == "flat.png");
    CHECK(j["pairs"][1]["ssim"].get<double>() == Catch::Approx(1.0).margin(1e-9));
    CHECK(j["mean_psnr"] == "inf");  // one infinite pair lifts the mean
    CHECK(j["mean_ssim"].is_number());
  }

  SECTION("needs either a pair or a manifest") {
    std::string err;
    const int code = run_cli("metric", tmp, nullptr, &err);
    CHECK(code == 2);
    CHECK_THAT(err, ContainsSubstring("--manifest"));
  }
}

TEST_CASE("feature tensors from the command line") {
  TempDir tmp;
  const Image img = step_image();
  save_image(img, tmp.str("in.png"));

  SECTION("extraction writes a loadable tensor that matches the library") {
    json j = run_cli_json(
        "features extract --in " + tmp.str("in.png") + " --out " + tmp.str("f.fmap"),
        tmp);
    CHECK(j["channels"] == 13);
    CHECK(j["height"] == 32);
    CHECK(j["width"] == 32);
    const FeatureMap from_cli = load_features(tmp.str("f.fmap"));
    const FeatureMap direct = extract_features(load_image(tmp.str("in.png")));
    REQUIRE(from_cli.data.size() == direct.data.size());
    CHECK(from_cli.data == direct.data);
  }

  SECTION("bank flags prune channels") {
    json j = run_cli_json("features extract --in " + tmp.str("in.png") + " --out " +
                              tmp.str("small.fmap") + " --no-raw --scales 1.0",
                          tmp);
    CHECK(j["channels"] == 4);
  }

  SECTION("matrix output matches the library computation") {
    save_features(extract_features(img), tmp.str("f.fmap"));
    json j = run_cli_json("gram --in " + tmp.str("f.fmap"), tmp);
    const GramMatrix g = gram(load_features(tmp.str("f.fmap")));
    REQUIRE(j["size"] == g.size);
    REQUIRE(static_cast<int>(j["matrix"].size()) == g.size);
    for (int i = 0; i < g.size; ++i)
      for (int k = 0; k < g.size; ++k)
        CHECK(j["matrix"][i][k].get<double>() == g.at(i, k));
  }

  SECTION("pairwise mode reports both distances") {
    save_features(extract_features(img), tmp.str("fa.fmap"));
    save_features(extract_features(gaussian_filter(img, 2.0)), tmp.str("fb.fmap"));
    json j = run_cli_json(
        "gram --in " + tmp.str("fa.fmap") + " --other " + tmp.str("fb.fmap"), tmp);
    const FeatureMap fa = load_features(tmp.str("fa.fmap"));
    const FeatureMap fb = load_features(tmp.str("fb.fmap"));
    CHECK(j["gram_distance"].get<double>() == gram_distance(gram(fa), gram(fb)));
    CHECK(j["expectation_distance"].get<double>() == expectation_distance(fa, fb));
  }

  SECTION("triplet loss with exactly representable statistics") {
    FeatureMap anchor(1, 1, 1);
    FeatureMap positive(1, 1, 4);
    positive.data = {1.0f, -1.0f, 0.0f, 0.0f};
    FeatureMap negative(1, 1, 8);
    negative.data = {1.0f, -1.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f};
    save_features(anchor, tmp.str("anchor.fmap"));
    save_features(positive, tmp.str("pos.fmap"));
    save_features(negative, tmp.str("neg.fmap"));
    json j = run_cli_json("closs --anchor " + tmp.str("anchor.fmap") +
                              " --positive " + tmp.str("pos.fmap") + " --negative " +
                              tmp.str("neg.fmap") + " --alpha 0.35 --beta 0.0",
                          tmp);
    CHECK(j["loss"].get<double>() == 0.6);
    CHECK(j["d_gram_pos"].get<double>() == 0.5);
    CHECK(j["d_exp_pos"].get<double>() == 0.0);
    REQUIRE(j["negatives"].size() == 1);
    CHECK(j["negatives"][0]["gram_term"].get<double>() == 0.6);
  }
}

TEST_CASE("dataset assembly and benchmarking from the command line") {
  TempDir tmp;
  REQUIRE(std::system(("mkdir -p " + tmp.str("sources") + " " + tmp.str("textures"))
                          .c_str()) == 0);
  save_image(step_image(), tmp.str("sources/scene.png"));
  save_image(checker_texture(0.45f, 0.55f), tmp.str("textures/checker.png"));
  save_image(checker_texture(0.48f, 0.52f), tmp.str("textures/soft.png"));

  SECTION("build emits screening reports, pairs, and a manifest") {
    json j = run_cli_json("dataset build --sources " + tmp.str("sources") +
                              " --textures " + tmp.str("textures") + " --out " +
                              tmp.str("data") + " --seed 7 --ops bilateral guided",
                          tmp);
    CHECK(j["schema"] == 1);
    CHECK(j["sources"] == 1);
    CHECK(j["sources_with_gt"] == 1);
    CHECK(j["textures"] == 2);
    CHECK(j["pairs"] == 2);

    json screening = json::parse(read_text(tmp.str("data/screening/0000.json")));
    CHECK(screening["candidates"].size() == 2);
    CHECK(screening["source"] == "scene.png");

    const std::string manifest_text = read_text(tmp.str("data/manifest.jsonl"));
    std::istringstream lines(manifest_text);
    std::string line;
    int n_records = 0;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      json rec = json::parse(line);
      const Image input = load_image(tmp.str("data/") + rec["input_path"].get<std::string>());
      const Image gt = load_image(tmp.str("data/") + rec["gt_path"].get<std::string>());
      CHECK(input.same_shape(gt));
      ++n_records;
    }
    CHECK(n_records == 2);

    SECTION("benchmark summarizes the manifest into ranked rows") {
      std::string out;
      const int code = run_cli("benchmark --manifest " + tmp.str("data/manifest.jsonl") +
                                   " --ops bilateral --out " + tmp.str("bench.json") +
                                   " --text " + tmp.str("bench.txt"),
                               tmp, &out);
      REQUIRE(code == 0);
      json b = json::parse(read_text(tmp.str("bench.json")));
      CHECK(b["pairs_used"] == 2);
      REQUIRE(b["rows"].size() == 2);
      for (const auto& row : b["rows"]) {
        CHECK(row["operator"].is_string());
        CHECK(row["mean_ssim"].is_number());
      }
      CHECK(b["warnings"].empty());
      const std::string table = read_text(tmp.str("bench.txt"));
      CHECK_THAT(table, ContainsSubstring("operator"));
      CHECK_THAT(table, ContainsSubstring("Original"));
    }

    SECTION("benchmark warns about unloadable pairs and keeps going") {
      {
        std::ofstream m(tmp.str("patched.jsonl"));
        m << read_text(tmp.str("data/manifest.jsonl"));
        m << R"({"input_path":"missing.png","gt_path":"missing.png","split":"train"})"
          << "\n";
      }
      std::string err;
      const int code = run_cli("benchmark --manifest " + tmp.str("patched.jsonl") +
                                   " --manifest-dir " + tmp.str("data") +
                                   " --ops bilateral --out " + tmp.str("b2.json"),
                               tmp, nullptr, &err);
      REQUIRE(code == 0);
      CHECK_THAT(err, ContainsSubstring("skipped pair"));
      json b = json::parse(read_text(tmp.str("b2.json")));
      CHECK(b["pairs_used"] == 2);
      CHECK(b["warnings"].size() == 1);
    }

    SECTION("benchmark rejects a split with no records") {
      std::string err;
      const int code = run_cli("benchmark --manifest " + tmp.str("data/manifest.jsonl") +
                                   " --ops bilateral --split test",
                               tmp, nullptr, &err);
      CHECK(code == 3);
      CHECK_THAT(err, ContainsSubstring("no manifest records"));
    }
  }

  SECTION("build with nothing passing screening exits with the empty code") {
    REQUIRE(std::system(("mkdir -p " + tmp.str("noisy")).c_str()) == 0);
    save_image(testkit::random_image(32, 32, 3, 721), tmp.str("noisy/noise.png"));
    std::string out, err;
    const int code = run_cli("dataset build --sources " + tmp.str("noisy") +
                                 " --textures " + tmp.str("textures") + " --out " +
                                 tmp.str("empty_data") + " --seed 7 --ops bilateral",
                             tmp, &out, &err);
    CHECK(code == 1);
    json j = json::parse(out);
    CHECK(j["pairs"] == 0);
    CHECK(j["sources_with_gt"] == 0);
    CHECK_THAT(err, ContainsSubstring("screening"));
  }
}

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>

#include "anomalyhop/bundle.hpp"
#include "anomalyhop/errors.hpp"
#include "anomalyhop/evalx.hpp"
#include "anomalyhop/parallel.hpp"
#include "anomalyhop/runner.hpp"

namespace fs = std::filesystem;
using namespace anomalyhop;

namespace {

std::vector<ImageTensor> split_images(const std::vector<LabeledSample>& samples) {
  std::vector<ImageTensor> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.image);
  return out;
}

int cmd_train(const std::string& config_path, const std::string& data_root,
              const std::string& out_path) {
  ClassConfig cfg = load_config(config_path);
  auto t0 = std::chrono::steady_clock::now();
  DatasetSplit split = imageio::load_mvtec_class(data_root, cfg.class_name,
                                                 cfg.resize, cfg.color_mode);
  ModelBundle bundle = train_model(cfg, split_images(split.train));
  save_bundle(bundle, out_path);
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::cout << "trained " << cfg.class_name << ": " << split.train.size()
            << " images, " << bundle.parameter_count << " parameters, "
            << secs << " s\n";
  return 0;
}

int cmd_predict(const std::string& bundle_path, const std::string& input,
                const std::string& out_dir, bool heatmaps, bool overlay,
                int threads) {
  ModelBundle bundle = load_bundle(bundle_path);
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input))
      if (e.is_regular_file() && e.path().extension() == ".png")
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(input);
  }
  if (files.empty())
    throw DatasetNotFoundError("no input images under " + input);
  fs::create_directories(out_dir);

  std::vector<double> seconds(files.size());
  std::mutex io_mutex;
  parallel_for(files.size(), threads, [&](size_t i) {
    ImageTensor img = imageio::load_png(files[i], bundle.config.color_mode);
    img = imageio::resize_bilinear(img, bundle.config.resize,
                                   bundle.config.resize);
    ScoreOutput out = score_image(bundle, img);
    seconds[i] = out.seconds;
    std::string stem = files[i].stem().string();
    if (heatmaps)
      anomaly::save_heatmap_png(out.fused,
                                fs::path(out_dir) / (stem + "_heatmap.png"));
    if (overlay)
      anomaly::save_overlay_png(out.fused, img,
                                fs::path(out_dir) / (stem + "_overlay.png"));
    std::lock_guard<std::mutex> lock(io_mutex);
    std::cout << files[i].filename().string() << "  max_score="
              << *std::max_element(out.fused.scores.begin(),
                                   out.fused.scores.end())
              << "  " << out.seconds << " s\n";
  });

  std::ofstream csv(fs::path(out_dir) / "timing.csv");
  csv << "image,seconds\n";
  for (size_t i = 0; i < files.size(); ++i)
    csv << files[i].filename().string() << "," << seconds[i] << "\n";
  return 0;
}

int cmd_eval(const std::string& bundle_path, const std::string& data_root,
             const std::string& csv_out, int threads) {
  ModelBundle bundle = load_bundle(bundle_path);
  const std::string& cls = bundle.config.class_name;
  DatasetSplit split = imageio::load_mvtec_class(data_root, cls,
                                                 bundle.config.resize,
                                                 bundle.config.color_mode);
  std::vector<std::pair<AnomalyMap, ImageTensor>> per_image(split.test.size());
  std::vector<double> seconds(split.test.size());
  parallel_for(split.test.size(), threads, [&](size_t i) {
    const auto& s = split.test[i];
    ScoreOutput out = score_image(bundle, s.image);
    seconds[i] = out.seconds;
    ImageTensor mask = s.has_mask()
                           ? s.mask
                           : ImageTensor(s.image.height, s.image.width, 1, 0.f);
    per_image[i] = {std::move(out.fused), std::move(mask)};
  });

  evalx::RocResult roc = evalx::evaluate_class(per_image);
  double mean_secs = 0;
  for (double s : seconds) mean_secs += s;
  mean_secs /= std::max<size_t>(1, seconds.size());

  evalx::ClassResult cr;
  cr.class_name = cls;
  cr.category = evalx::mvtec_category(cls);
  cr.auc = roc.auc;
  cr.n_images = static_cast<int>(split.test.size());
  cr.seconds_per_image = mean_secs;
  evalx::Summary summary = evalx::summarize({cr});
  std::cout << summary.table;

  if (!csv_out.empty()) {
    bool fresh = !fs::exists(csv_out);
    std::ofstream csv(csv_out, std::ios::app);
    if (fresh) csv << "class,category,auc,n_images,seconds_per_image\n";
    for (const auto& row : summary.csv_rows) csv << row << "\n";
  }
  return 0;
}

struct Candidate {
  ClassConfig cfg;
  int b = 0, k = 0;  // 0 when the candidate is the unmodified template
};

std::vector<Candidate> make_candidates(const ClassConfig& tmpl, int budget) {
  std::vector<Candidate> out;
  out.push_back({tmpl, 0, 0});
  for (int b = 2; b <= 7 && static_cast<int>(out.size()) < budget; ++b)
    for (int k = 2; k <= 5 && static_cast<int>(out.size()) < budget; ++k) {
      Candidate c{tmpl, b, k};
      for (auto& h : c.cfg.hop_specs) {
        h.window = b;
        h.keep = k;
      }
      out.push_back(std::move(c));
    }
  if (static_cast<int>(out.size()) > budget) out.resize(budget);
  return out;
}

int cmd_search(const std::string& config_path, const std::string& data_root,
               int budget, const std::string& select_on,
               const std::string& out_dir, unsigned seed, int threads) {
  if (select_on != "test" && select_on != "holdout")
    throw ConfigInfeasibleError("--select-on must be 'test' or 'holdout'");
  ClassConfig tmpl = load_config(config_path);
  DatasetSplit split = imageio::load_mvtec_class(data_root, tmpl.class_name,
                                                 tmpl.resize, tmpl.color_mode);
  std::vector<ImageTensor> train = split_images(split.train);

  // Holdout protocol: carve off 20% of train images and give each a seeded
  // synthetic defect; candidates never see the holdout during fitting.
  std::vector<ImageTensor> fit_images = train;
  std::vector<std::pair<ImageTensor, ImageTensor>> holdout;  // image, mask
  if (select_on == "holdout") {
    size_t n_hold = std::max<size_t>(1, train.size() / 5);
    std::mt19937 rng(seed);
    fit_images.assign(train.begin(), train.end() - n_hold);
    if (fit_images.size() < 2)
      throw InsufficientDataError("not enough train images for holdout");
    for (size_t i = train.size() - n_hold; i < train.size(); ++i) {
      const ImageTensor& img = train[i];
      std::uniform_int_distribution<int> rr(0, img.height - 17);
      std::uniform_int_distribution<int> cc(0, img.width - 17);
      auto [injected, mask] = imageio::inject_anomaly(
          img, {rr(rng), cc(rng), 16, 16}, imageio::InjectMode::invert);
      holdout.emplace_back(std::move(injected), std::move(mask));
    }
  }

  struct Row {
    int b, k;
    double auc;
  };
  std::vector<Row> leaderboard;
  ClassConfig best_cfg = tmpl;
  double best_auc = -1.0;

  for (const auto& cand : make_candidates(tmpl, budget)) {
    try {
      ModelBundle bundle = train_model(cand.cfg, fit_images);
      std::vector<std::pair<AnomalyMap, ImageTensor>> per_image;
      if (select_on == "test") {
        per_image.resize(split.test.size());
        parallel_for(split.test.size(), threads, [&](size_t i) {
          const auto& s = split.test[i];
          ScoreOutput out = score_image(bundle, s.image);
          ImageTensor mask =
              s.has_mask() ? s.mask
                           : ImageTensor(s.image.height, s.image.width, 1, 0.f);
          per_image[i] = {std::move(out.fused), std::move(mask)};
        });
      } else {
        per_image.resize(holdout.size());
        parallel_for(holdout.size(), threads, [&](size_t i) {
          ScoreOutput out = score_image(bundle, holdout[i].first);
          per_image[i] = {std::move(out.fused), holdout[i].second};
        });
      }
      double auc = evalx::evaluate_class(per_image).auc;
      leaderboard.push_back({cand.b, cand.k, auc});
      std::cout << "candidate b=" << cand.b << " k=" << cand.k
                << " auc=" << auc << "\n";
      if (auc > best_auc) {
        best_auc = auc;
        best_cfg = cand.cfg;
      }
    } catch (const Error& e) {
      std::cerr << "skipping candidate b=" << cand.b << " k=" << cand.k
                << ": " << e.what() << "\n";
    }
  }
  if (leaderboard.empty())
    throw ConfigInfeasibleError("search: every candidate was infeasible");

  std::stable_sort(leaderboard.begin(), leaderboard.end(),
                   [](const Row& a, const Row& b) { return a.auc > b.auc; });
  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / "leaderboard.csv");
  csv << "rank,b,k,auc\n";
  for (size_t i = 0; i < leaderboard.size(); ++i)
    csv << i + 1 << "," << leaderboard[i].b << "," << leaderboard[i].k << ","
        << leaderboard[i].auc << "\n";
  save_config(best_cfg, fs::path(out_dir) / "best_config.json");
  std::cout << "best auc " << best_auc << ", config written to "
            << (fs::path(out_dir) / "best_config.json").string() << "\n";
  return 0;
}

int cmd_info(const std::string& bundle_path) {
  std::cout << bundle_header_json(bundle_path) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anomalyhop: image anomaly localization with Saab feature cascades"};
  app.require_subcommand(1);

  std::string config_path, data_root, out_path, bundle_path, input;
  std::string select_on = "test";
  std::string csv_out;
  int budget = 10;
  unsigned seed = 0;
  int threads = default_threads();
  bool heatmaps = false, overlay = false;

  auto* train = app.add_subcommand("train", "Fit a model bundle from normal images");
  train->add_option("--config", config_path)->required();
  train->add_option("--data-root", data_root)->required();
  train->add_option("--out", out_path)->required();
  train->add_option("--threads", threads);

  auto* predict = app.add_subcommand("predict", "Score images, write heatmaps");
  predict->add_option("bundle", bundle_path)->required();
  predict->add_option("input", input, "image file or directory")->required();
  predict->add_option("--out", out_path)->required();
  predict->add_flag("--heatmaps", heatmaps);
  predict->add_flag("--overlay", overlay);
  predict->add_option("--threads", threads);

  auto* eval = app.add_subcommand("eval", "Pixel-level ROC-AUC on the test split");
  eval->add_option("bundle", bundle_path)->required();
  eval->add_option("--data-root", data_root)->required();
  eval->add_option("--out", csv_out, "CSV file to append the result row to");
  eval->add_option("--threads", threads);

  auto* search = app.add_subcommand("search", "Hyperparameter grid search");
  search->add_option("--config", config_path)->required();
  search->add_option("--data-root", data_root)->required();
  search->add_option("--budget", budget);
  search->add_option("--select-on", select_on)
      ->check(CLI::IsMember({"test", "holdout"}));
  search->add_option("--out", out_path)->required();
  search->add_option("--seed", seed);
  search->add_option("--threads", threads);

  auto* info = app.add_subcommand("info", "Print a bundle's header");
  info->add_option("bundle", bundle_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, data_root, out_path);
    if (predict->parsed())
      return cmd_predict(bundle_path, input, out_path, heatmaps, overlay,
                         threads);
    if (eval->parsed()) return cmd_eval(bundle_path, data_root, csv_out, threads);
    if (search->parsed())
      return cmd_search(config_path, data_root, budget, select_on, out_path,
                        seed, threads);
    if (info->parsed()) return cmd_info(bundle_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

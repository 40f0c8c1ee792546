#include "anomalyhop/imageio.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "anomalyhop/errors.hpp"

namespace anomalyhop::imageio {

namespace fs = std::filesystem;

ImageTensor load_png(const fs::path& path, ColorMode color) {
  cv::Mat mat = cv::imread(path.string(), color == ColorMode::gray
                                              ? cv::IMREAD_GRAYSCALE
                                              : cv::IMREAD_COLOR);
  if (mat.empty())
    throw CorruptInputError("failed to decode image: " + path.string());
  int c = color == ColorMode::gray ? 1 : 3;
  ImageTensor out(mat.rows, mat.cols, c);
  for (int r = 0; r < mat.rows; ++r) {
    for (int col = 0; col < mat.cols; ++col) {
      if (c == 1) {
        out.at(r, col, 0) = mat.at<uchar>(r, col) / 255.f;
      } else {
        auto px = mat.at<cv::Vec3b>(r, col);  // BGR
        out.at(r, col, 0) = px[2] / 255.f;
        out.at(r, col, 1) = px[1] / 255.f;
        out.at(r, col, 2) = px[0] / 255.f;
      }
    }
  }
  return out;
}

void save_png(const ImageTensor& img, const fs::path& path) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("save_png expects 1 or 3 channels");
  cv::Mat mat(img.height, img.width, img.channels == 1 ? CV_8UC1 : CV_8UC3);
  auto to_u8 = [](float v) {
    return static_cast<uchar>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f));
  };
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      if (img.channels == 1) {
        mat.at<uchar>(r, c) = to_u8(img.at(r, c, 0));
      } else {
        mat.at<cv::Vec3b>(r, c) = {to_u8(img.at(r, c, 2)),
                                   to_u8(img.at(r, c, 1)),
                                   to_u8(img.at(r, c, 0))};
      }
    }
  }
  if (!cv::imwrite(path.string(), mat))
    throw Error(ExitCode::failure, "failed to write PNG: " + path.string());
}

ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument("resize_bilinear: output dims must be >= 1");
  if (out_h == img.height && out_w == img.width) return img;

  ImageTensor out(out_h, out_w, img.channels);
  double sy = static_cast<double>(img.height) / out_h;
  double sx = static_cast<double>(img.width) / out_w;
  for (int r = 0; r < out_h; ++r) {
    double fy = (r + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int ya = std::clamp(y0, 0, img.height - 1);
    int yb = std::clamp(y0 + 1, 0, img.height - 1);
    for (int c = 0; c < out_w; ++c) {
      double fx = (c + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int xa = std::clamp(x0, 0, img.width - 1);
      int xb = std::clamp(x0 + 1, 0, img.width - 1);
      for (int ch = 0; ch < img.channels; ++ch) {
        double top = (1.0 - wx) * img.at(ya, xa, ch) + wx * img.at(ya, xb, ch);
        double bot = (1.0 - wx) * img.at(yb, xa, ch) + wx * img.at(yb, xb, ch);
        out.at(r, c, ch) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

ImageTensor resize_nearest(const ImageTensor& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument("resize_nearest: output dims must be >= 1");
  ImageTensor out(out_h, out_w, img.channels);
  double sy = static_cast<double>(img.height) / out_h;
  double sx = static_cast<double>(img.width) / out_w;
  for (int r = 0; r < out_h; ++r) {
    int y = std::clamp(static_cast<int>(std::floor((r + 0.5) * sy)), 0,
                       img.height - 1);
    for (int c = 0; c < out_w; ++c) {
      int x = std::clamp(static_cast<int>(std::floor((c + 0.5) * sx)), 0,
                         img.width - 1);
      for (int ch = 0; ch < img.channels; ++ch)
        out.at(r, c, ch) = img.at(y, x, ch);
    }
  }
  return out;
}

namespace {

ImageTensor binarize(const ImageTensor& mask) {
  ImageTensor out = mask;
  for (auto& v : out.data) v = v > 0.5f ? 1.f : 0.f;
  return out;
}

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png")
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

DatasetSplit load_mvtec_class(const fs::path& root_path,
                              const std::string& class_name, int target_size,
                              ColorMode color) {
  fs::path class_dir = root_path / class_name;
  fs::path train_dir = class_dir / "train" / "good";
  fs::path test_dir = class_dir / "test";
  fs::path gt_dir = class_dir / "ground_truth";
  if (!fs::is_directory(train_dir))
    throw DatasetNotFoundError("missing directory: " + train_dir.string());
  if (!fs::is_directory(test_dir))
    throw DatasetNotFoundError("missing directory: " + test_dir.string());

  DatasetSplit split;
  for (const auto& f : sorted_pngs(train_dir)) {
    LabeledSample s;
    s.image = resize_bilinear(load_png(f, color), target_size, target_size);
    s.label = Label::normal;
    s.class_name = class_name;
    split.train.push_back(std::move(s));
  }
  if (split.train.empty())
    throw DatasetNotFoundError("no training images in " + train_dir.string());

  std::vector<fs::path> defect_dirs;
  for (const auto& e : fs::directory_iterator(test_dir))
    if (e.is_directory()) defect_dirs.push_back(e.path());
  std::sort(defect_dirs.begin(), defect_dirs.end());

  for (const auto& dir : defect_dirs) {
    std::string defect = dir.filename().string();
    bool is_good = defect == "good";
    for (const auto& f : sorted_pngs(dir)) {
      LabeledSample s;
      s.image = resize_bilinear(load_png(f, color), target_size, target_size);
      s.label = is_good ? Label::normal : Label::anomalous;
      s.class_name = class_name;
      if (!is_good) {
        s.defect_name = defect;
        fs::path mask_path =
            gt_dir / defect / (f.stem().string() + "_mask.png");
        if (fs::exists(mask_path)) {
          ImageTensor m = load_png(mask_path, ColorMode::gray);
          s.mask = binarize(resize_nearest(m, target_size, target_size));
        }
      } else {
        s.mask = ImageTensor(target_size, target_size, 1, 0.f);
      }
      split.test.push_back(std::move(s));
    }
  }
  return split;
}

ImageTensor synth_texture(TextureKind kind, int size, unsigned seed) {
  if (size < 32) throw std::invalid_argument("synth_texture: size must be >= 32");
  ImageTensor out(size, size, 1);
  std::mt19937 rng(seed);

  switch (kind) {
    case TextureKind::sinusoid: {
      std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
      double px = phase(rng), py = phase(rng);
      double freq = 2.0 * M_PI * 6.0 / size;  // 6 cycles per axis
      std::uniform_real_distribution<double> noise(-0.05, 0.05);
      for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
          double v = 0.5 + 0.25 * (std::sin(freq * c + px) +
                                   std::sin(freq * r + py));
          v += noise(rng);
          out.at(r, c, 0) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      break;
    }
    case TextureKind::checker: {
      // 8px cells with a seeded offset; exactly two values, no noise.
      std::uniform_int_distribution<int> off(0, 7);
      int ox = off(rng), oy = off(rng);
      for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
          bool on = (((r + oy) / 8) + ((c + ox) / 8)) % 2 == 0;
          out.at(r, c, 0) = on ? 0.85f : 0.15f;
        }
      break;
    }
    case TextureKind::noise: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (auto& v : out.data) v = static_cast<float>(u(rng));
      break;
    }
    default:
      throw std::invalid_argument("synth_texture: unknown kind");
  }
  return out;
}

std::pair<ImageTensor, ImageTensor> inject_anomaly(const ImageTensor& img,
                                                   Rect rect, InjectMode mode,
                                                   float value) {
  if (rect.h < 1 || rect.w < 1 || rect.row < 0 || rect.col < 0 ||
      rect.row + rect.h > img.height || rect.col + rect.w > img.width)
    throw std::invalid_argument("inject_anomaly: rect out of bounds");

  ImageTensor out = img;
  ImageTensor mask(img.height, img.width, 1, 0.f);
  for (int r = rect.row; r < rect.row + rect.h; ++r) {
    for (int c = rect.col; c < rect.col + rect.w; ++c) {
      mask.at(r, c, 0) = 1.f;
      for (int ch = 0; ch < img.channels; ++ch) {
        out.at(r, c, ch) = mode == InjectMode::invert
                               ? 1.f - img.at(r, c, ch)
                               : value;
      }
    }
  }
  return {std::move(out), std::move(mask)};
}

}  // namespace anomalyhop::imageio

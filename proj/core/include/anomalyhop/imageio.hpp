#pragma once

#include <filesystem>
#include <string>

#include "anomalyhop/image.hpp"

namespace anomalyhop::imageio {

enum class ColorMode { rgb, gray };

/// Load one MVTec AD class: <root>/<class>/train/good/*.png,
/// <root>/<class>/test/<defect>/*.png, <root>/<class>/ground_truth/<defect>/*_mask.png.
/// Images are decoded, converted per color mode, bilinearly resized to
/// target_size x target_size and scaled to [0,1]. Masks are resized with
/// nearest-neighbor and re-binarized at 0.5.
DatasetSplit load_mvtec_class(const std::filesystem::path& root_path,
                              const std::string& class_name, int target_size,
                              ColorMode color = ColorMode::rgb);

/// Bilinear resize, align-corners=false: sample centers at
/// (i+0.5)*scale - 0.5, edge-clamped. Channel count preserved.
ImageTensor resize_bilinear(const ImageTensor& img, int out_h, int out_w);

/// Nearest-neighbor resize, same center convention as resize_bilinear.
ImageTensor resize_nearest(const ImageTensor& img, int out_h, int out_w);

enum class TextureKind { sinusoid, checker, noise };

/// Deterministic synthetic texture in [0,1]. sinusoid: seeded-phase sine
/// over both axes plus noise of amplitude 0.05; checker: seeded-offset
/// 8px checkerboard, exactly two values, no noise; noise: uniform [0,1].
ImageTensor synth_texture(TextureKind kind, int size, unsigned seed);

enum class InjectMode { invert, constant };

struct Rect {
  int row = 0, col = 0, h = 0, w = 0;
};

/// Overwrite a rectangle of img (invert or set to value) and return the
/// modified image together with the binary mask of the rectangle.
std::pair<ImageTensor, ImageTensor> inject_anomaly(const ImageTensor& img,
                                                   Rect rect, InjectMode mode,
                                                   float value = 1.f);

/// 8-bit PNG decode (gray or RGB), values scaled to [0,1].
ImageTensor load_png(const std::filesystem::path& path,
                     ColorMode color = ColorMode::rgb);

/// 8-bit PNG encode; expects values in [0,1], 1 or 3 channels.
void save_png(const ImageTensor& img, const std::filesystem::path& path);

}  // namespace anomalyhop::imageio

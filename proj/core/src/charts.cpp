#include "chartlink/charts.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>

#include "chartlink/errors.hpp"
#include "chartlink/image.hpp"

namespace chartlink {

namespace {

using Rng = std::mt19937_64;

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

cv::Scalar random_colour(Rng& rng, int lo, int hi) {
  return cv::Scalar(uniform_int(rng, lo, hi), uniform_int(rng, lo, hi), uniform_int(rng, lo, hi));
}

std::vector<cv::Scalar> palette(Rng& rng, int n) {
  // Evenly spaced hues with a random offset, converted from HSV.
  std::vector<cv::Scalar> colours;
  const int offset = uniform_int(rng, 0, 179);
  const int sat = uniform_int(rng, 120, 230);
  const int val = uniform_int(rng, 150, 240);
  for (int i = 0; i < n; ++i) {
    cv::Mat hsv(1, 1, CV_8UC3, cv::Scalar((offset + i * 180 / n) % 180, sat, val));
    cv::Mat rgb;
    cv::cvtColor(hsv, rgb, cv::COLOR_HSV2RGB);
    const auto px = rgb.at<cv::Vec3b>(0, 0);
    colours.emplace_back(px[0], px[1], px[2]);
  }
  return colours;
}

std::string glyphs(Rng& rng, int n) {
  static constexpr char kAlphabet[] = "ABCDEFGHJKLMNPQRSTUVWXYZabcdefghkmnpqrstuvwxyz0123456789";
  std::string s;
  for (int i = 0; i < n; ++i) s.push_back(kAlphabet[uniform_int(rng, 0, sizeof(kAlphabet) - 2)]);
  return s;
}

torch::Tensor to_tensor(const cv::Mat& rgb) {
  auto t = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
  return t.permute({2, 0, 1}).to(torch::kFloat32).div_(255.0).contiguous();
}

}  // namespace

torch::Tensor generate_chart(int height, int width, Rng& rng, ChartKind kind) {
  if (height < 16 || width < 16) throw InvalidParams("charts need at least 16x16 pixels");
  const bool dark = uniform(rng, 0, 1) < 0.15;
  const cv::Scalar background = dark ? random_colour(rng, 15, 50) : random_colour(rng, 235, 255);
  const cv::Scalar ink = dark ? random_colour(rng, 200, 240) : random_colour(rng, 30, 80);
  const cv::Scalar grid = dark ? random_colour(rng, 60, 80) : random_colour(rng, 205, 225);
  cv::Mat img(height, width, CV_8UC3, background);

  const int scale = std::max(1, std::min(height, width) / 96);
  const int left = width / 8 + uniform_int(rng, 0, width / 16);
  const int bottom = height - height / 8 - uniform_int(rng, 0, height / 16);
  const int top = height / 10;
  const int right = width - width / 16;
  const int plot_w = right - left, plot_h = bottom - top;

  if (uniform(rng, 0, 1) < 0.8) {
    const int lines = uniform_int(rng, 3, 6);
    for (int i = 1; i <= lines; ++i) {
      const int y = bottom - i * plot_h / (lines + 1);
      cv::line(img, {left, y}, {right, y}, grid, 1);
    }
  }
  cv::line(img, {left, top}, {left, bottom}, ink, scale);
  cv::line(img, {left, bottom}, {right, bottom}, ink, scale);

  const int series = kind == ChartKind::Bar ? 1 : uniform_int(rng, 1, 3);
  const auto colours = palette(rng, std::max(series, 6));
  const double font = 0.3 * scale;

  switch (kind) {
    case ChartKind::Bar: {
      const int bars = uniform_int(rng, 3, 8);
      const int slot = plot_w / bars;
      const bool multicolour = uniform(rng, 0, 1) < 0.5;
      for (int i = 0; i < bars; ++i) {
        const int h = static_cast<int>(uniform(rng, 0.15, 0.95) * plot_h);
        const int x0 = left + i * slot + slot / 6;
        cv::rectangle(img, {x0, bottom - h}, {x0 + slot * 2 / 3, bottom - 1},
                      multicolour ? colours[i % colours.size()] : colours[0], cv::FILLED);
      }
      break;
    }
    case ChartKind::Line: {
      const int points = uniform_int(rng, 5, 12);
      for (int s = 0; s < series; ++s) {
        std::vector<cv::Point> pts;
        double y = uniform(rng, 0.2, 0.8);
        for (int i = 0; i < points; ++i) {
          y = std::clamp(y + uniform(rng, -0.2, 0.2), 0.05, 0.95);
          pts.emplace_back(left + i * plot_w / (points - 1), bottom - static_cast<int>(y * plot_h));
        }
        cv::polylines(img, pts, false, colours[s], 2 * scale, cv::LINE_AA);
        for (const auto& p : pts) cv::circle(img, p, 2 * scale, colours[s], cv::FILLED, cv::LINE_AA);
      }
      break;
    }
    case ChartKind::Scatter: {
      for (int s = 0; s < series; ++s) {
        const int points = uniform_int(rng, 10, 30);
        const double cx = uniform(rng, 0.2, 0.8), cy = uniform(rng, 0.2, 0.8);
        for (int i = 0; i < points; ++i) {
          const double x = std::clamp(cx + uniform(rng, -0.25, 0.25), 0.02, 0.98);
          const double y = std::clamp(cy + uniform(rng, -0.25, 0.25), 0.02, 0.98);
          cv::circle(img, {left + static_cast<int>(x * plot_w), bottom - static_cast<int>(y * plot_h)},
                     uniform_int(rng, 2, 4) * scale, colours[s], cv::FILLED, cv::LINE_AA);
        }
      }
      break;
    }
  }

  // Title and tick labels.
  cv::putText(img, glyphs(rng, uniform_int(rng, 4, 10)), {left, top - 2 * scale}, cv::FONT_HERSHEY_SIMPLEX, font * 1.3,
              ink, 1, cv::LINE_AA);
  const int ticks = uniform_int(rng, 2, 5);
  for (int i = 0; i < ticks; ++i) {
    cv::putText(img, glyphs(rng, uniform_int(rng, 1, 3)), {left + i * plot_w / ticks, bottom + 10 * scale},
                cv::FONT_HERSHEY_SIMPLEX, font, ink, 1, cv::LINE_AA);
  }
  return to_tensor(img);
}

ChartCorpus generate_charts(int n, int height, int width, uint64_t seed) {
  if (n < 0) throw InvalidParams("chart count must be non-negative");
  ChartCorpus corpus;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const auto kind = static_cast<ChartKind>(uniform_int(rng, 0, 2));
    corpus.images.push_back(generate_chart(height, width, rng, kind));
    char name[32];
    std::snprintf(name, sizeof(name), "chart_%05d", i);
    corpus.names.emplace_back(name);
  }
  return corpus;
}

void save_corpus(const std::filesystem::path& dir, const ChartCorpus& corpus) {
  std::filesystem::create_directories(dir);
  for (size_t i = 0; i < corpus.size(); ++i) save_png(dir / (corpus.names[i] + ".png"), corpus.images[i]);
}

ChartCorpus load_corpus(const std::filesystem::path& dir, int min_height, int min_width) {
  if (!std::filesystem::is_directory(dir)) throw EmptyCorpus("corpus directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (entry.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  ChartCorpus corpus;
  for (const auto& f : files) {
    auto img = load_image(f);
    if (img.size(1) < min_height || img.size(2) < min_width) {
      throw InvalidParams("corpus image " + f.filename().string() + " is smaller than the network input");
    }
    corpus.images.push_back(img);
    corpus.names.push_back(f.stem().string());
  }
  if (corpus.empty()) throw EmptyCorpus("no images found in " + dir.string());
  return corpus;
}

CorpusSplit split_corpus(const ChartCorpus& corpus, int ratio) {
  if (ratio < 1) throw InvalidParams("split ratio must be >= 1");
  CorpusSplit split;
  for (size_t i = 0; i < corpus.size(); ++i) {
    auto& side = (i % (ratio + 1) == static_cast<size_t>(ratio)) ? split.test : split.train;
    side.images.push_back(corpus.images[i]);
    side.names.push_back(corpus.names[i]);
  }
  return split;
}

double background_fraction(const torch::Tensor& image) {
  if (image.dim() != 3 || image.size(0) != 3) throw ShapeMismatch("background_fraction expects [3, H, W]");
  auto q = (image.clamp(0, 1) * 255).round().to(torch::kInt64);
  auto packed = (q[0] * 65536 + q[1] * 256 + q[2]).flatten();
  auto counts = torch::bincount(packed);
  return counts.max().item<double>() / static_cast<double>(packed.numel());
}

}  // namespace chartlink

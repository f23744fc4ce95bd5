#include "pheno/image.hpp"

#include <cstring>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "pheno/errors.hpp"

namespace pheno {

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  data_.resize(pixel_count() * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

RgbImage read_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError("cannot decode image " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  RgbImage out(rgb.cols, rgb.rows);
  for (int y = 0; y < rgb.rows; ++y) {
    std::memcpy(out.bytes().data() + static_cast<std::size_t>(y) * rgb.cols * 3, rgb.ptr<std::uint8_t>(y),
                static_cast<std::size_t>(rgb.cols) * 3);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  if (image.empty()) throw IoError("refusing to write empty image " + path.string());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  cv::Mat rgb(image.height(), image.width(), CV_8UC3, const_cast<std::uint8_t*>(image.bytes().data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 6};
  if (!cv::imwrite(path.string(), bgr, params)) throw IoError("cannot write " + path.string());
}

}  // namespace pheno

// Copyright 2026 The Anyword Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "anyword/image.hpp"

#include <algorithm>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "anyword/errors.hpp"

namespace anyword {

Image load_image(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw Error(ErrorCode::kIoError, "cannot read image " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  Image img(static_cast<std::size_t>(rgb.cols), static_cast<std::size_t>(rgb.rows), 3);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<cv::Vec3b>(y);
    for (int x = 0; x < rgb.cols; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(row[x][c]) / 255.0f;
    }
  }
  return img;
}

void save_image(const Image& image, const std::filesystem::path& path) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorCode::kInvalidArgument, "only 1- or 3-channel images can be written");
  }
  const int h = static_cast<int>(image.height);
  const int w = static_cast<int>(image.width);
  cv::Mat out(h, w, image.channels == 3 ? CV_8UC3 : CV_8UC1);
  for (int y = 0; y < h; ++y) {
    auto* row = out.ptr<std::uint8_t>(y);
    for (int x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < image.channels; ++c) {
        float v = std::clamp(image.at(x, y, c), 0.0f, 1.0f);
        // OpenCV stores BGR.
        std::size_t dst = image.channels == 3 ? 2 - c : c;
        row[x * image.channels + dst] = static_cast<std::uint8_t>(v * 255.0f + 0.5f);
      }
    }
  }
  if (!cv::imwrite(path.string(), out)) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

}  // namespace anyword

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

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <array>

#include "anyword/pipeline.hpp"

namespace anyword::pipeline {
namespace {

const std::array<cv::Scalar, 8> kPalette = {
    cv::Scalar(230, 25, 75),  cv::Scalar(60, 180, 75),  cv::Scalar(0, 130, 200),  cv::Scalar(245, 130, 48),
    cv::Scalar(145, 30, 180), cv::Scalar(70, 240, 240), cv::Scalar(240, 50, 230), cv::Scalar(210, 245, 60),
};

cv::Mat to_mat(const Image& image) {
  cv::Mat out(static_cast<int>(image.height), static_cast<int>(image.width), CV_8UC3);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      auto& px = out.at<cv::Vec3b>(static_cast<int>(y), static_cast<int>(x));
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = image.at(x, y, std::min(c, image.channels - 1));
        px[static_cast<int>(c)] = cv::saturate_cast<std::uint8_t>(std::clamp(v, 0.0f, 1.0f) * 255.0f + 0.5f);
      }
    }
  }
  return out;
}

Image from_mat(const cv::Mat& m) {
  Image out(static_cast<std::size_t>(m.cols), static_cast<std::size_t>(m.rows), 3);
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) {
      const auto& px = m.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(c)) = px[c] / 255.0f;
    }
  }
  return out;
}

}  // namespace

Image render_overlay(const Image& image, const segmentor::GroundedSegmentation& seg) {
  if (image.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot draw on an empty image");
  cv::Mat canvas = to_mat(image);
  for (std::size_t k = 0; k < seg.records.size(); ++k) {
    const auto& rec = seg.records[k];
    if (rec.mask.rows() != image.height || rec.mask.cols() != image.width) {
      throw Error(ErrorCode::kShapeMismatch, "mask does not match the image");
    }
    const cv::Scalar color = kPalette[k % kPalette.size()];
    cv::Mat mask(static_cast<int>(image.height), static_cast<int>(image.width), CV_8U,
                 const_cast<std::uint8_t*>(rec.mask.cells().data()));
    cv::Mat tinted(canvas.size(), canvas.type(), color);
    cv::Mat blended;
    cv::addWeighted(canvas, 0.55, tinted, 0.45, 0.0, blended);
    blended.copyTo(canvas, mask);

    std::vector<std::vector<cv::Point>> contours;
    cv::Mat mask_copy = mask.clone();
    cv::findContours(mask_copy, contours, cv::RETR_EXTERNAL, cv::CHAIN_APPROX_SIMPLE);
    cv::drawContours(canvas, contours, -1, color, 1, cv::LINE_AA);

    for (const auto& p : rec.prompt.positives) {
      const cv::Point c(static_cast<int>(p.x()), static_cast<int>(p.y()));
      cv::circle(canvas, c, 4, color, cv::FILLED, cv::LINE_AA);
      cv::circle(canvas, c, 4, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    }
    for (const auto& p : rec.prompt.negatives) {
      cv::circle(canvas, cv::Point(static_cast<int>(p.x()), static_cast<int>(p.y())), 4, color, 2, cv::LINE_AA);
    }

    const cv::Rect box = cv::boundingRect(mask);
    if (box.area() > 0) {
      const cv::Point at(box.x, std::max(10, box.y - 3));
      cv::putText(canvas, rec.label, at, cv::FONT_HERSHEY_SIMPLEX, 0.35, cv::Scalar(0, 0, 0), 2, cv::LINE_AA);
      cv::putText(canvas, rec.label, at, cv::FONT_HERSHEY_SIMPLEX, 0.35, color, 1, cv::LINE_AA);
    }
  }
  return from_mat(canvas);
}

}  // namespace anyword::pipeline

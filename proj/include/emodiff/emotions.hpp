#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace emodiff {

inline constexpr std::size_t kNumEmotions = 8;

enum class Emotion : std::size_t {
  Anger = 0,
  Anxiety,
  Sadness,
  Disgust,
  Joy,
  Love,
  Surprise,
  Anticipation,
};

inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "anger", "anxiety", "sadness", "disgust",
    "joy",   "love",    "surprise", "anticipation"};

inline std::string_view emotion_name(Emotion e) {
  return kEmotionNames[static_cast<std::size_t>(e)];
}

inline std::optional<Emotion> emotion_from_name(std::string_view name) {
  for (std::size_t k = 0; k < kNumEmotions; ++k) {
    if (kEmotionNames[k] == name) return static_cast<Emotion>(k);
  }
  return std::nullopt;
}

// Dense per-emotion score vector. Intensities from a lexicon live in [0, 1];
// document scores are unbounded.
struct EmotionVector {
  std::array<double, kNumEmotions> v{};

  double& operator[](std::size_t k) { return v[k]; }
  double operator[](std::size_t k) const { return v[k]; }
  double& operator[](Emotion e) { return v[static_cast<std::size_t>(e)]; }
  double operator[](Emotion e) const { return v[static_cast<std::size_t>(e)]; }

  EmotionVector& operator+=(const EmotionVector& o) {
    for (std::size_t k = 0; k < kNumEmotions; ++k) v[k] += o.v[k];
    return *this;
  }

  // Accumulates scale * o, the elementary update in document scoring.
  void add_scaled(double scale, const EmotionVector& o) {
    for (std::size_t k = 0; k < kNumEmotions; ++k) v[k] += scale * o.v[k];
  }

  double sum() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }

  bool any_positive() const {
    for (double x : v)
      if (x > 0.0) return true;
    return false;
  }

  bool operator==(const EmotionVector& o) const { return v == o.v; }
};

}  // namespace emodiff

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace pseudolabel {

// Depression-severity class. The integer encoding is fixed and is used for
// file formats, logit positions and confusion-matrix axes.
enum class SeverityLabel : int { Low = 0, Moderate = 1, Severe = 2 };

inline constexpr std::size_t kNumClasses = 3;

inline constexpr std::array<SeverityLabel, kNumClasses> kAllLabels = {
    SeverityLabel::Low, SeverityLabel::Moderate, SeverityLabel::Severe};

constexpr std::size_t index_of(SeverityLabel label) {
  return static_cast<std::size_t>(label);
}

constexpr SeverityLabel label_from_index(std::size_t index) {
  return static_cast<SeverityLabel>(static_cast<int>(index));
}

// Lowercase wire name: "low", "moderate", "severe".
std::string_view to_string(SeverityLabel label);

// Accepts the wire names case-insensitively; nullopt for anything else.
std::optional<SeverityLabel> parse_label(std::string_view name);

// "low, moderate, severe" - used in error messages.
std::string allowed_labels();

}  // namespace pseudolabel

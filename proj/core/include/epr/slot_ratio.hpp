#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace epr {

/// Exact non-negative rational, used for memory slots per class (which may
/// be fractional, e.g. 0.75) and for packing factors derived from it.
class SlotRatio {
 public:
  SlotRatio() = default;
  SlotRatio(std::int64_t num, std::int64_t den = 1);

  /// Accepts "2", "0.75" or "3/4".
  static SlotRatio parse(std::string_view text);
  static SlotRatio from_double(double value);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  bool positive() const noexcept { return num_ > 0; }
  bool is_integer() const noexcept { return den_ == 1; }

  /// Shortest decimal form when one exists ("0.75"), otherwise "num/den".
  std::string to_string() const;

  friend bool operator==(const SlotRatio&, const SlotRatio&) = default;
  friend bool operator<(const SlotRatio& a, const SlotRatio& b) { return a.num_ * b.den_ < b.num_ * a.den_; }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace epr

#include "epr/slot_ratio.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace epr {

SlotRatio::SlotRatio(std::int64_t num, std::int64_t den) {
  if (den <= 0) throw std::invalid_argument("slot ratio denominator must be positive");
  if (num < 0) throw std::invalid_argument("slot ratio must be non-negative");
  const std::int64_t g = std::gcd(num, den);
  num_ = g ? num / g : 0;
  den_ = g ? den / g : 1;
}

namespace {

std::int64_t parse_int(std::string_view s, std::string_view whole) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("cannot parse slot ratio '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

SlotRatio SlotRatio::parse(std::string_view text) {
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return SlotRatio(parse_int(text.substr(0, slash), text), parse_int(text.substr(slash + 1), text));
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    const std::string_view whole = text.substr(0, dot);
    const std::string_view frac = text.substr(dot + 1);
    if (frac.size() > 12) throw std::invalid_argument("too many decimals in slot ratio '" + std::string(text) + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::int64_t w = whole.empty() ? 0 : parse_int(whole, text);
    const std::int64_t f = frac.empty() ? 0 : parse_int(frac, text);
    return SlotRatio(w * den + f, den);
  }
  return SlotRatio(parse_int(text, text));
}

SlotRatio SlotRatio::from_double(double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("slot ratio must be finite and >= 0");
  constexpr std::int64_t den = 1'000'000;
  return SlotRatio(static_cast<std::int64_t>(std::llround(value * den)), den);
}

std::string SlotRatio::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  std::int64_t d = den_;
  int twos = 0, fives = 0;
  while (d % 2 == 0) d /= 2, ++twos;
  while (d % 5 == 0) d /= 5, ++fives;
  if (d != 1) return std::to_string(num_) + "/" + std::to_string(den_);
  const int digits = std::max(twos, fives);
  std::int64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const std::int64_t scaled = num_ * (scale / den_);
  std::string frac = std::to_string(scaled % scale);
  frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
  return std::to_string(scaled / scale) + "." + frac;
}

}  // namespace epr

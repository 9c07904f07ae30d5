#include "acdnet/pano_padding.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <vector>

#include "acdnet/ops.hpp"

namespace acdnet {

std::string_view to_string(PadMode mode) {
  switch (mode) {
    case PadMode::Circular: return "circular";
    case PadMode::LeftRight: return "leftright";
    case PadMode::Zero: return "zero";
  }
  return "?";
}

std::string_view table_label(PadMode mode) {
  switch (mode) {
    case PadMode::Circular: return "CirPad";
    case PadMode::LeftRight: return "LRPad";
    case PadMode::Zero: return "ZeroPad";
  }
  return "?";
}

PadMode parse_pad_mode(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (t == "circular" || t == "cirpad") return PadMode::Circular;
  if (t == "leftright" || t == "lr" || t == "lrpad") return PadMode::LeftRight;
  if (t == "zero" || t == "zeropad") return PadMode::Zero;
  throw std::invalid_argument("unknown padding mode '" + std::string(text) + "'");
}

Tensor pad(const Tensor& input, const PadSpec& spec) {
  const Shape s = input.shape();
  const auto h = static_cast<std::int64_t>(s.h);
  const auto w = static_cast<std::int64_t>(s.w);
  if (spec.top < 0 || spec.bottom < 0 || spec.left < 0 || spec.right < 0)
    throw std::invalid_argument("pad: negative padding");
  if (spec.top > h || spec.bottom > h)
    throw std::invalid_argument("pad: vertical padding exceeds input height " +
                                std::to_string(h));
  if (w == 0 && (spec.left > 0 || spec.right > 0))
    throw std::invalid_argument("pad: cannot wrap an empty row");
  if (spec.mode == PadMode::Circular && w % 2 != 0)
    throw std::invalid_argument("pad: circular mode needs an even width, got " +
                                std::to_string(w));

  const std::int64_t oh = h + spec.top + spec.bottom;
  const std::int64_t ow = w + spec.left + spec.right;
  const bool wraps = spec.mode != PadMode::Zero;
  auto wrap = [w](std::int64_t x) { return ((x % w) + w) % w; };

  std::vector<std::int64_t> index(static_cast<std::size_t>(oh * ow), -1);
  for (std::int64_t oy = 0; oy < oh; ++oy) {
    const std::int64_t y = oy - spec.top;
    std::int64_t src_row = y;
    std::int64_t shift = 0;
    if (y < 0 || y >= h) {
      if (spec.mode != PadMode::Circular) continue;
      src_row = y < 0 ? -y - 1 : 2 * h - 1 - y;  // j-th row outward mirrors row j-1
      shift = w / 2;
    }
    for (std::int64_t ox = 0; ox < ow; ++ox) {
      std::int64_t x = ox - spec.left + shift;
      if (x < shift || x >= w + shift) {
        if (!wraps) continue;
      }
      x = wrap(x);
      index[static_cast<std::size_t>(oy * ow + ox)] = src_row * w + x;
    }
  }
  return spatial_gather(input, static_cast<std::size_t>(oh), static_cast<std::size_t>(ow),
                        index);
}

PadSpec pad_for_branch(Dilation dilation, PadMode mode) {
  return PadSpec{dilation.dy, dilation.dy, dilation.dx, dilation.dx, mode};
}

}  // namespace acdnet

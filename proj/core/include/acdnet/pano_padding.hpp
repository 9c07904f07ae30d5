#pragma once

#include <string>
#include <string_view>

#include "acdnet/tensor.hpp"

namespace acdnet {

/// Boundary fill for equirectangular feature maps.
enum class PadMode {
  Circular,   // horizontal wrap; rows beyond a pole copy the antipodal meridian
  LeftRight,  // horizontal wrap; zero rows above and below
  Zero,
};

std::string_view to_string(PadMode mode);
/// Accepts "circular"/"cirpad", "leftright"/"lr"/"lrpad", "zero"/"zeropad"
/// (case-insensitive).
PadMode parse_pad_mode(std::string_view text);
/// Row label used in comparison tables: CirPad, LRPad or ZeroPad.
std::string_view table_label(PadMode mode);

struct PadSpec {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;
  PadMode mode = PadMode::Circular;
};

/// Dilation of a 3x3 kernel as (rows, columns).
struct Dilation {
  int dy = 1;
  int dx = 1;
  friend bool operator==(const Dilation&, const Dilation&) = default;
};

/// Materializes the padded tensor (B, C, H+top+bottom, W+left+right).
///
/// Column wrap is periodic, so horizontal pads may exceed W. Pole rows: the
/// j-th row outward from the top edge copies input row j-1 rolled by W/2
/// (bottom: row H-j); corners take the pole rule first, then the wrap.
/// Throws std::invalid_argument for negative pads, top/bottom larger than H,
/// or an odd width in Circular mode.
Tensor pad(const Tensor& input, const PadSpec& spec);

/// Size-preserving pad for a 3x3 kernel at the given dilation.
PadSpec pad_for_branch(Dilation dilation, PadMode mode);

}  // namespace acdnet

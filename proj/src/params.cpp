#include "fdmac/params.hpp"

#include <limits>

namespace fdmac {

const char* to_string(Mode mode) {
  return mode == Mode::FullDuplex ? "fd" : "csma";
}

void ProtocolParams::validate() const {
  if (m_users < 1) throw std::invalid_argument("m_users must be >= 1");
  if (packet_len < 1) throw std::invalid_argument("packet_len must be >= 1");
  if (cw_min < 1) throw std::invalid_argument("cw_min must be >= 1");
  if (w_max < 0) throw std::invalid_argument("w_max must be >= 0");
  if (difs < 1) throw std::invalid_argument("difs must be >= 1");
  if (!(p_false_alarm >= 0.0 && p_false_alarm < 1.0))
    throw std::invalid_argument("p_false_alarm must lie in [0, 1)");
  if (!(p_miss >= 0.0 && p_miss < 1.0))
    throw std::invalid_argument("p_miss must lie in [0, 1)");
  if (w_max >= 62 ||
      static_cast<std::int64_t>(cw_min) >
          (std::numeric_limits<std::int64_t>::max() >> w_max))
    throw std::invalid_argument("cw_min * 2^w_max overflows the window type");
}

}  // namespace fdmac

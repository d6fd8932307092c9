#ifndef HFV_VERSION_HPP
#define HFV_VERSION_HPP

namespace hfv {

inline const char* version_string() { return "0.1.0"; }

}  // namespace hfv

#endif

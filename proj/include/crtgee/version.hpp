#ifndef CRTGEE_VERSION_HPP
#define CRTGEE_VERSION_HPP

namespace crtgee {

inline constexpr const char* kToolName = "crtgee";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace crtgee

#endif

#ifndef LANGSPACE_VERSION_HPP
#define LANGSPACE_VERSION_HPP

namespace langspace {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kFileFormatVersion = "1";

}  // namespace langspace

#endif  // LANGSPACE_VERSION_HPP

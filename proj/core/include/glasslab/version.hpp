#ifndef GLASSLAB_VERSION_HPP
#define GLASSLAB_VERSION_HPP

namespace glasslab {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

}  // namespace glasslab

#endif

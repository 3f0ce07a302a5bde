#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace synthcxr {

/// Base class for failures that abort the current operation.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void strf_append(std::ostringstream&) {}

template <typename T, typename... Rest>
void strf_append(std::ostringstream& os, const T& v, const Rest&... rest) {
    os << v;
    strf_append(os, rest...);
}
}  // namespace detail

/// Concatenates stream-insertable pieces into a string.
template <typename... Args>
std::string strf(const Args&... args) {
    std::ostringstream os;
    detail::strf_append(os, args...);
    return os.str();
}

template <typename... Args>
[[noreturn]] void fail(const Args&... args) {
    throw Error(strf(args...));
}

}  // namespace synthcxr

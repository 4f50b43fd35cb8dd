#include "stochdrive/logging.hpp"

#include <iostream>
#include <mutex>

namespace stochdrive {

namespace {
std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}
void to_stderr(const std::string& msg) {
  std::cerr << "warning: " << msg << '\n';
}
std::function<void(const std::string&)>& sink() {
  static std::function<void(const std::string&)> s = to_stderr;
  return s;
}
}  // namespace

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  sink()(message);
}

void set_warning_sink(std::function<void(const std::string&)> s) {
  std::lock_guard lock(sink_mutex());
  sink() = s ? std::move(s) : to_stderr;
}

}  // namespace stochdrive

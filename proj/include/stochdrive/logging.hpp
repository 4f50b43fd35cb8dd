#pragma once

#include <functional>
#include <string>

namespace stochdrive {

// Non-fatal diagnostics (skipped clusters, failed segments). Defaults to
// stderr; tests may redirect or silence.
void warn(const std::string& message);
// An empty function restores the stderr default.
void set_warning_sink(std::function<void(const std::string&)> sink);

}  // namespace stochdrive

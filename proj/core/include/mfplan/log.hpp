#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>

namespace mfp {

using WarningSink = std::function<void(std::string_view)>;

/// Emits a warning through the installed sink (stderr by default).
void warn(std::string_view message);

/// Replaces the process-wide warning sink; returns the previous one.
WarningSink set_warning_sink(WarningSink sink);

/// Installs a sink for the lifetime of the object. Used by tests and the CLI.
class ScopedWarningCapture {
 public:
  ScopedWarningCapture();
  ~ScopedWarningCapture();
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

  const std::string& text() const { return *text_; }
  bool contains(std::string_view needle) const;

 private:
  std::shared_ptr<std::string> text_;
  WarningSink previous_;
};

}  // namespace mfp

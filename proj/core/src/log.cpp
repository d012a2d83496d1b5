#include "mfplan/log.hpp"

#include <iostream>
#include <memory>
#include <mutex>

#include "mfplan/error.hpp"

namespace mfp {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return s;
}

}  // namespace

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::parse: return "parse";
    case ErrorCode::coverage: return "coverage";
    case ErrorCode::convergence: return "convergence";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::absolute_continuity: return "absolute_continuity";
    case ErrorCode::full_range: return "full_range";
    case ErrorCode::grid_mismatch: return "grid_mismatch";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

WarningSink set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  return std::exchange(sink(), std::move(s));
}

ScopedWarningCapture::ScopedWarningCapture()
    : text_(std::make_shared<std::string>()) {
  auto text = text_;
  previous_ = set_warning_sink([text](std::string_view msg) {
    text->append(msg);
    text->push_back('\n');
  });
}

ScopedWarningCapture::~ScopedWarningCapture() {
  set_warning_sink(std::move(previous_));
}

bool ScopedWarningCapture::contains(std::string_view needle) const {
  return text_->find(needle) != std::string::npos;
}

}  // namespace mfp

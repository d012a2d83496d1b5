#pragma once

#include <filesystem>
#include <vector>

#include "mfplan/measures.hpp"

namespace mfp::app {

/// Renders the SVG figures for whatever artifacts exist in dir; returns the
/// files written. mu1, when given, is overlaid on the terminal histogram.
std::vector<std::filesystem::path> render_plots(const std::filesystem::path& dir,
                                                const GridMeasure* mu1 = nullptr);

}  // namespace mfp::app

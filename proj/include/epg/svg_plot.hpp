#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace epg::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::vector<Series> series;
  /// Dashed horizontal reference, e.g. a target or a bound.
  std::optional<double> reference;
  std::string reference_label;
};

/// Stacks panels vertically in a single standalone SVG document.
void write(std::ostream& out, const std::vector<Panel>& panels, const std::string& title);

}  // namespace epg::svg

#pragma once

#include <string>
#include <string_view>

namespace automl {

/// "http://host:port/path" split into the origin cpp-httplib wants and the path.
struct UrlParts {
  std::string origin;
  std::string path;
};

UrlParts split_url(std::string_view url);

}  // namespace automl

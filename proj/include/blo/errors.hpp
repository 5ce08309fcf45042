#pragma once

#include <stdexcept>
#include <string>

namespace blo {

/// A (domain, adversary, player) triple that cannot run together, e.g. a
/// decoder that needs the exact-rational loss channel paired with a Gaussian
/// model. The CLI maps this to its own exit code.
class incompatible_error : public std::runtime_error {
 public:
  explicit incompatible_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace blo

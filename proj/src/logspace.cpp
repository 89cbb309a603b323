#include "spnseq/logspace.hpp"

#include <string>

#include "spnseq/error.hpp"

namespace spnseq {

const char* to_string(Semiring semiring) noexcept {
  return semiring == Semiring::SumProduct ? "sum" : "max";
}

Semiring semiring_from_string(std::string_view name) {
  if (name == "sum") return Semiring::SumProduct;
  if (name == "max") return Semiring::MaxProduct;
  throw ConfigError("unknown semiring '" + std::string(name) + "' (expected sum or max)");
}

}  // namespace spnseq

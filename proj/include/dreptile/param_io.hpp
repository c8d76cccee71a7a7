#pragma once

// Text format for saved parameter vectors:
//
//   dreptile-params 1
//   model <categorical|extractive|...>
//   registry_hash <16 hex digits>
//   length <N>
//   <N lines, one value each, printed with 17 significant digits>
//
// 17 significant digits round-trip every double exactly.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "dreptile/diffcore.hpp"

namespace dreptile {

struct SavedParams {
  std::string model;
  std::uint64_t registry_hash = 0;
  ParamVector params;
};

void write_params(std::ostream& out, const SavedParams& saved);
SavedParams read_params(std::istream& in);

void save_params(const std::string& path, const SavedParams& saved);
SavedParams load_params(const std::string& path);

}  // namespace dreptile

#pragma once

#include <filesystem>
#include <iosfwd>

#include "daef/param_store.hpp"

namespace daef {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Text manifest followed by raw values:
//   DAEFORMER-CKPT v1
//   <entry count>
//   <name> <rank> <dims...> <offset>     (offset in values, one line per entry)
//   <little-endian IEEE-754 binary64 blob>
void write_checkpoint(std::ostream& out, const ParamStore& params);
void write_checkpoint(const std::filesystem::path& path, const ParamStore& params);

// Overwrites the values of `params` in place. Names, order and shapes must
// match the store exactly.
void read_checkpoint(std::istream& in, ParamStore& params);
void read_checkpoint(const std::filesystem::path& path, ParamStore& params);

}  // namespace daef

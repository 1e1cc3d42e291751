#pragma once

#include "rpmchain/bytes.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace rpmchain {

// Lowercase hex is a bit-exact contract in ledger dumps and cloud block
// files, so decoding is strict: even length, lowercase digits only.

std::string to_hex(ByteView bytes);
std::optional<Bytes> from_hex(std::string_view hex);

} // namespace rpmchain

#pragma once

namespace hybridcontract {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hybridcontract

#pragma once

namespace capexrl {

inline constexpr const char* kVersionTag = "capexrl-0.1.0";

}

#include "sforge/schedules.hpp"

// Schedule math is header-only; this unit pins the library symbols that
// are handy to have non-inline for debuggers.

namespace sforge {

static_assert(kDefaultVpTmin > 0.0);

} // namespace sforge

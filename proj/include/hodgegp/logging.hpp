// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace hodgegp {

/// Sets the log level from HODGEGP_LOG_LEVEL (trace, debug, info, warn, error,
/// off). Defaults to warn. Logs go to stderr.
void init_logging();

}  // namespace hodgegp

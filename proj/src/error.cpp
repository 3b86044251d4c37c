// SPDX-License-Identifier: Apache-2.0
#include "fiun/error.hpp"

namespace fiun {

const char* status_name(Status s) {
    switch (s) {
    case Status::ok: return "ok";
    case Status::param_error: return "param_error";
    case Status::invariant_error: return "invariant_error";
    case Status::config_error: return "config_error";
    case Status::io_error: return "io_error";
    case Status::internal_error: return "internal_error";
    }
    return "unknown";
}

} // namespace fiun

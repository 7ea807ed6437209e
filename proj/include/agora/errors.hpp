#pragma once

#include <stdexcept>
#include <string>

namespace agora {

// every library failure derives from this so callers can catch once
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct argument_error : error { using error::error; };
struct degenerate_density_error : error { using error::error; };
struct empty_segment_error : error { using error::error; };
struct regularity_error : error { using error::error; };
struct solver_failure : error { using error::error; };
struct unsupported_distribution : error { using error::error; };
struct config_error : error { using error::error; };
struct parse_error : error { using error::error; };

} // namespace agora

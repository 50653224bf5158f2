#pragma once

// Maps the canonical include path onto the vendored single header.
#include <json.hpp>

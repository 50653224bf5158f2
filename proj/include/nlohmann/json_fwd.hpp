#pragma once

// The vendored distribution is the single-header one, so the forward-only
// header just pulls in the full definition.
#include <json.hpp>

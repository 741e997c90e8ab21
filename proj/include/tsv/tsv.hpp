#pragma once

#include "tsv/bidirectional.hpp"
#include "tsv/decision_tree.hpp"
#include "tsv/errors.hpp"
#include "tsv/gedanken.hpp"
#include "tsv/hilbert.hpp"
#include "tsv/rng.hpp"
#include "tsv/two_boundary.hpp"

namespace tsv {
inline constexpr const char* kVersion = "0.1.0";
}

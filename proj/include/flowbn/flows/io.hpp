#pragma once

#include <filesystem>
#include <istream>
#include <string>

#include "flowbn/flows/model.hpp"
#include "flowbn/flows/spec.hpp"
#include "flowbn/numcore/matrix.hpp"

namespace flowbn::flows {

// Architecture JSON:
//   {"dim": 2, "steps": [{"conditioner": "autoregressive" | {"coupling": {"k": 2}} | "constant",
//                         "normalizer": "affine" | {"monotone_pwl": {"bins": 32}},
//                         "permutation": "identity" | "reverse" | {"explicit": [2, 1]}}]}
// Explicit permutations list 1-based component indices. "permutation"
// defaults to "identity" when absent. Unknown fields are rejected.
FlowSpec spec_from_json(const std::string& text);
std::string spec_to_json(const FlowSpec& spec);

// Checkpoint JSON: format version, spec, conditioner hidden widths, and one
// named array per parameter block. Doubles are written with enough digits
// to read back bit-identically.
inline constexpr int kCheckpointVersion = 1;
std::string checkpoint_to_json(const FlowModel& model);
FlowModel checkpoint_from_json(const std::string& text);

// Numeric CSV, one sample per row. A first line that does not parse as
// numbers is taken as a header. Blank lines are skipped. Throws InputError
// naming the source and line for anything else.
num::Matrix read_csv(std::istream& in, const std::string& source = "<stream>");
num::Matrix read_csv_file(const std::filesystem::path& path);
std::string to_csv(const num::Matrix& m, const std::string& header = "");

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace flowbn::flows

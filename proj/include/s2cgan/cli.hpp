#pragma once

// Command-line front end: train, eval, infer, edit-infer, baseline,
// oracle-check, gradcheck. Exit 0 on success, 1 on validation errors, 2 on
// runtime failures.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace s2cgan {

int cli_main(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

// Parses a label-map literal such as "0001112220001112".
std::vector<int> parse_grid_literal(std::string_view text, std::size_t cells, std::size_t labels);
std::string grid_to_string(const std::vector<int>& labels);

// Applies an edit command "set <i>..<j> <label>" or "set <i> <label>"
// (inclusive range) to `labels`.
void apply_edit(std::vector<int>& labels, std::string_view command, std::size_t label_count);

}  // namespace s2cgan

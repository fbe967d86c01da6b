#pragma once

#include <string_view>

namespace chainhydro {

std::string_view version();
std::string_view git_revision();

} // namespace chainhydro

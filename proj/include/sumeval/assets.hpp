#pragma once

#include <string_view>

// Text assets compiled in from assets/ at build time.
namespace sumeval::assets {

std::string_view familiar_words();
std::string_view judge_instructions();
std::string_view judge_output_format();
std::string_view summarize_prompt();
std::string_view refine_prompt();

}  // namespace sumeval::assets

// Copyright 2026 The vagent Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VAGENT_TOKENIZER_HPP_
#define VAGENT_TOKENIZER_HPP_

#include <string_view>
#include <vector>

namespace vagent {

// Splits on whitespace; runs of letters/digits form one token and every other
// printable byte is a token by itself. Used for cost accounting only.
std::vector<std::string_view> tokenize(std::string_view text);
std::size_t count_tokens(std::string_view text);

}  // namespace vagent

#endif  // VAGENT_TOKENIZER_HPP_

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "chainexit/chain_model.hpp"

namespace chainexit::config
{

using Json = nlohmann::json;

//! Commented YAML listing every key with its default value.
std::string_view example_text();

//! Parsed example_text().
const Json& defaults();

//! Parses YAML text into a config tree merged over the defaults.
Json parse(std::string_view yaml_text);

//! Applies "dotted.key=value"; the value is read as a YAML scalar or flow sequence.
void apply_override(Json& cfg, std::string_view assignment);

//! Throws ConfigError naming the first key that has no counterpart in defaults().
void check_keys(const Json& cfg);

//! Typed access by dotted path; ConfigError names the key on a type mismatch.
double number(const Json& cfg, std::string_view path);
std::size_t count(const Json& cfg, std::string_view path);
std::string text(const Json& cfg, std::string_view path);
bool flag(const Json& cfg, std::string_view path);
std::vector<double> numbers(const Json& cfg, std::string_view path);
std::vector<std::size_t> counts(const Json& cfg, std::string_view path);
const Json& at(const Json& cfg, std::string_view path);

//! Chain definition from the chain, domains and controls sections.
ChainDefinition chain_definition(const Json& cfg);

}  // namespace chainexit::config

// Strict JSON scene parsing for the command-line front end: parse failures carry
// line/column positions, unknown keys are rejected with their object path, and
// every typed access names the path it was reading.
#pragma once

#include <initializer_list>
#include <string>

#include "json.hpp"

#include "diffcoh/diffeo.hpp"
#include "diffcoh/groupcoc.hpp"
#include "diffcoh/torusfield.hpp"

namespace diffcoh {

using Json = nlohmann::ordered_json;

// Parse text (or a file) into JSON; malformed input raises domain_error with a
// "line L, column C" diagnostic.
Json parse_scene_text(const std::string& text);
Json load_scene_file(const std::string& path);

// Reject any key of `obj` outside `allowed`.
void require_keys(const Json& obj, std::initializer_list<const char*> allowed,
                  const std::string& path);

// Presence- and type-checked accessors; `path` labels the error message.
const Json& need(const Json& obj, const char* key, const std::string& path);
int as_int(const Json& j, const std::string& path);
std::uint64_t as_u64(const Json& j, const std::string& path);
double as_double(const Json& j, const std::string& path);
std::string as_string(const Json& j, const std::string& path);

Letter parse_letter(const Json& j, int dim, const std::string& path);
DiffeoWord parse_word(const Json& j, int dim, const std::string& path);
StructureField parse_structure(const Json& j, int dim, const std::string& path);
FourierField parse_field(const Json& j, const std::string& path);
L1Chain parse_chain(const Json& j, const std::string& path);

}  // namespace diffcoh

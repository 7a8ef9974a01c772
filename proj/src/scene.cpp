#include "diffcoh/scene.hpp"

#include <fstream>
#include <sstream>

#include "diffcoh/errors.hpp"

namespace diffcoh {

namespace {

std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw domain_error("scene: " + path + ": " + what);
}

}  // namespace

Json parse_scene_text(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw domain_error("scene parse error at " + line_col(text, e.byte > 0 ? e.byte - 1 : 0) +
                           ": " + e.what());
    }
}

Json load_scene_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw domain_error("cannot open scene file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scene_text(buf.str());
}

void require_keys(const Json& obj, std::initializer_list<const char*> allowed,
                  const std::string& path) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok) {
            std::string known;
            for (const char* k : allowed) {
                if (!known.empty()) known += ", ";
                known += k;
            }
            fail(path, "unknown key '" + item.key() + "' (known keys: " + known + ")");
        }
    }
}

const Json& need(const Json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path, std::string("missing required key '") + key + "'");
    return *it;
}

int as_int(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

std::uint64_t as_u64(const Json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !j.is_number_integer()) fail(path, "expected an unsigned integer");
    if (j.is_number_integer() && j.get<std::int64_t>() < 0) fail(path, "expected a non-negative integer");
    return j.get<std::uint64_t>();
}

double as_double(const Json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

std::string as_string(const Json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

FourierField parse_field(const Json& j, const std::string& path) {
    require_keys(j, {"dim", "rank", "bandlimit", "coeffs"}, path);
    try {
        return field_from_json(j);
    } catch (const domain_error& e) {
        fail(path, e.what());
    } catch (const nlohmann::json::exception& e) {
        fail(path, e.what());
    }
}

Letter parse_letter(const Json& j, int dim, const std::string& path) {
    if (!j.is_object() || j.size() != 1)
        fail(path, "a letter is an object with exactly one of: linear, translate, shear, ham, inv");
    const auto& item = *j.items().begin();
    const std::string& kind = item.key();
    const Json& body = item.value();

    if (kind == "inv") {
        Letter inner = parse_letter(body, dim, path + "/inv");
        inner.exp = -inner.exp;
        return inner;
    }
    if (kind == "linear") {
        if (!body.is_array() || static_cast<int>(body.size()) != dim)
            fail(path + "/linear", "expected a " + std::to_string(dim) + "x" + std::to_string(dim) +
                                       " integer matrix (array of rows)");
        Eigen::MatrixXi m(dim, dim);
        for (int r = 0; r < dim; ++r) {
            const Json& row = body[r];
            if (!row.is_array() || static_cast<int>(row.size()) != dim)
                fail(path + "/linear", "row " + std::to_string(r) + " must have " +
                                           std::to_string(dim) + " integer entries");
            for (int c = 0; c < dim; ++c)
                m(r, c) = as_int(row[c], path + "/linear[" + std::to_string(r) + "][" +
                                             std::to_string(c) + "]");
        }
        return Letter{LinearTorus(m), 1};
    }
    if (kind == "translate") {
        if (!body.is_array() || static_cast<int>(body.size()) != dim)
            fail(path + "/translate", "expected " + std::to_string(dim) + " numbers");
        Eigen::VectorXd v(dim);
        for (int a = 0; a < dim; ++a)
            v(a) = as_double(body[a], path + "/translate[" + std::to_string(a) + "]");
        return Letter{Translation{v}, 1};
    }
    if (kind == "shear") {
        require_keys(body, {"axis", "phi"}, path + "/shear");
        int axis = as_int(need(body, "axis", path + "/shear"), path + "/shear/axis");
        FourierField phi = parse_field(need(body, "phi", path + "/shear"), path + "/shear/phi");
        return Letter{Shear(axis, std::move(phi)), 1};
    }
    if (kind == "ham") {
        require_keys(body, {"F", "G", "steps"}, path + "/ham");
        FourierField f = parse_field(need(body, "F", path + "/ham"), path + "/ham/F");
        FourierField g = parse_field(need(body, "G", path + "/ham"), path + "/ham/G");
        int steps = as_int(need(body, "steps", path + "/ham"), path + "/ham/steps");
        return Letter{HamSplit(std::move(f), std::move(g), steps), 1};
    }
    fail(path, "unknown letter kind '" + kind + "'");
}

DiffeoWord parse_word(const Json& j, int dim, const std::string& path) {
    if (!j.is_array()) fail(path, "a word is an array of letters");
    std::vector<Letter> letters;
    letters.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        letters.push_back(parse_letter(j[i], dim, path + "[" + std::to_string(i) + "]"));
    return make_word(dim, std::move(letters));
}

StructureField parse_structure(const Json& j, int dim, const std::string& path) {
    if (j.is_string()) {
        if (j.get<std::string>() == "standard") {
            if (dim % 2 != 0) fail(path, "the standard complex structure needs an even dimension");
            return StructureField::standard_complex(dim / 2);
        }
        fail(path, "the only string shorthand is \"standard\"");
    }
    require_keys(j, {"kind", "field"}, path);
    const std::string kind = as_string(need(j, "kind", path), path + "/kind");
    StructureField::Kind k;
    if (kind == "complex")
        k = StructureField::Kind::Complex;
    else if (kind == "metric")
        k = StructureField::Kind::Metric;
    else
        fail(path + "/kind", "expected \"complex\" or \"metric\"");

    const Json& fld = need(j, "field", path);
    if (fld.is_string() && fld.get<std::string>() == "standard") {
        if (k == StructureField::Kind::Complex) {
            if (dim % 2 != 0) fail(path, "the standard complex structure needs an even dimension");
            return StructureField::standard_complex(dim / 2);
        }
        return StructureField::standard_metric(dim);
    }
    FourierField f = parse_field(fld, path + "/field");
    if (f.dim() != dim) fail(path + "/field", "field dimension does not match the scene dimension");
    return StructureField::from_field(k, std::move(f));
}

L1Chain parse_chain(const Json& j, const std::string& path) {
    require_keys(j, {"terms", "note"}, path);
    const Json& terms = need(j, "terms", path);
    if (!terms.is_array()) fail(path + "/terms", "expected an array of terms");
    L1Chain chain;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string tpath = path + "/terms[" + std::to_string(i) + "]";
        require_keys(terms[i], {"a", "h", "k"}, tpath);
        L1Term t;
        t.a = as_double(need(terms[i], "a", tpath), tpath + "/a");
        t.h = as_string(need(terms[i], "h", tpath), tpath + "/h");
        t.k = as_string(need(terms[i], "k", tpath), tpath + "/k");
        chain.terms.push_back(std::move(t));
    }
    if (j.contains("note")) chain.truncation_note = as_string(j["note"], path + "/note");
    return chain;
}

}  // namespace diffcoh

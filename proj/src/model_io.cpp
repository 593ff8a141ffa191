#include <cstdint>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "subexp/errors.hpp"
#include "subexp/levy_model.hpp"

namespace subexp {

namespace {

using nlohmann::json;

double need_number(const json& params, const char* key, const char* variant) {
    if (!params.contains(key) || !params[key].is_number())
        throw config_error(std::string(variant) + ": missing numeric param \"" +
                           key + "\"");
    return params[key].get<double>();
}

std::vector<ExpansionTerm> parse_expansion(const json& doc) {
    if (!doc.contains("expansion") || !doc["expansion"].is_array())
        throw config_error("model JSON: \"expansion\" array required");
    std::vector<ExpansionTerm> terms;
    for (const auto& item : doc["expansion"]) {
        if (!item.is_array() || item.size() != 2 || !item[0].is_number() ||
            !item[1].is_number())
            throw config_error(
                "model JSON: expansion entries must be [coeff, exponent]");
        terms.push_back({item[0].get<double>(), item[1].get<double>()});
    }
    return terms;
}

}  // namespace

ModelPtr model_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("model JSON parse error: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("variant") ||
        !doc["variant"].is_string())
        throw config_error("model JSON: object with a \"variant\" string "
                           "required");
    const std::string variant = doc["variant"].get<std::string>();
    const json params = doc.value("params", json::object());

    if (variant == "stable")
        return make_stable(need_number(params, "alpha", "stable"));
    if (variant == "gamma") return make_gamma_sub();
    if (variant == "abc")
        return make_abc(need_number(params, "a", "abc"),
                        need_number(params, "b", "abc"),
                        need_number(params, "c", "abc"));
    if (variant == "compound_poisson") {
        const std::string kind = params.value("kind", "exponential");
        if (kind != "exponential")
            throw config_error("compound_poisson: only the \"exponential\" "
                               "kind can be loaded from JSON");
        return make_compound_poisson_exponential();
    }
    if (variant == "infinite_power_tail")
        return make_infinite_power_tail(
            parse_expansion(doc),
            need_number(params, "remainder_order", "infinite_power_tail"));
    if (variant == "beta_coalescent")
        return make_beta_coalescent(
            need_number(params, "alpha", "beta_coalescent"),
            need_number(params, "beta", "beta_coalescent"));
    if (variant == "barrier_walk")
        return make_barrier_walk(need_number(params, "c", "barrier_walk"));
    throw config_error("model JSON: unknown variant \"" + variant + "\"");
}

ModelPtr model_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

std::string model_to_json(const LevyModel& model) {
    json doc;
    doc["variant"] = model.variant();
    doc["params"] = json::parse(model.params_json());
    if (auto terms = model.lower_expansion()) {
        json arr = json::array();
        for (const auto& t : *terms)
            arr.push_back(json::array({t.coeff, t.exponent}));
        doc["expansion"] = arr;
    }
    return doc.dump();
}

std::uint64_t model_hash(const LevyModel& model) {
    const std::string canon = model_to_json(model);
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace subexp

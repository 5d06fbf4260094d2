#pragma once
// Field-path aware accessors: every validation error names the offending field
// as a dotted path such as `simulation.cohorts[1].prior.values`.

#include <string>

#include "artai/error.hpp"
#include "json.hpp"

namespace artai::jsonx {

inline std::string join(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
}

inline void require_object(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ValidationError("field `" + where + "`: expected an object");
}

inline const nlohmann::json& require(const nlohmann::json& obj, const std::string& key, const std::string& where) {
    require_object(obj, where);
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) throw ValidationError("field `" + join(where, key) + "` is required");
    return *it;
}

template <class T>
T as(const nlohmann::json& v, const std::string& path) {
    try {
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw ValidationError("field `" + path + "`: expected a number");
        } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!v.is_number_integer()) throw ValidationError("field `" + path + "`: expected an integer");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ValidationError("field `" + path + "`: expected a string");
        }
        return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("field `" + path + "`: " + e.what());
    }
}

template <class T>
T get(const nlohmann::json& obj, const std::string& key, const std::string& where) {
    return as<T>(require(obj, key, where), join(where, key));
}

template <class T>
T get_or(const nlohmann::json& obj, const std::string& key, T fallback, const std::string& where) {
    require_object(obj, where);
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    return as<T>(*it, join(where, key));
}

}  // namespace artai::jsonx

#pragma once

#include "rdoe/config.hpp"
#include "rdoe/errors.hpp"

#include <json.hpp>

#include <set>
#include <string>

namespace rdoe::detail {

using json = nlohmann::ordered_json;

json vector_json(const Vector& v);
json matrix_json(const Matrix& m);  ///< array of rows
json solver_json(const SolverConfig& cfg);
json config_json(const RunConfig& cfg);

/// Overlays the keys of `j` onto `cfg`; unknown keys are errors.
void apply_config_json(const json& j, RunConfig& cfg);

/// Strict reader for one JSON object: every key must be consumed.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path);

    bool has(const char* key) const { return j_.contains(key); }
    const json& raw(const char* key);

    void read(const char* key, int& out);
    void read(const char* key, double& out);
    void read(const char* key, std::uint64_t& out);
    void read(const char* key, bool& out);
    void read(const char* key, std::string& out);
    void read(const char* key, Vector& out);
    void read(const char* key, std::vector<int>& out);
    void read(const char* key, std::vector<double>& out);
    void read(const char* key, std::vector<Vector>& out);

    /// Throws on keys that were never read.
    void finish() const;
    std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Vector json_vector(const json& j, const std::string& where);
Matrix json_matrix(const json& j, const std::string& where);

}  // namespace rdoe::detail

#pragma once

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "sl2dyn/measure.hpp"

namespace sl2dyn {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// measure fixtures from JSON: a list of atoms, each 8 reals (re/im of a,b,c,d)
// plus a weight; either a bare top-level array or {"atoms": [...]}
// ---------------------------------------------------------------------------

inline MatrixMeasure measure_from_json(const json& doc) {
    const json& arr = doc.is_array() ? doc : doc.at("atoms");
    std::vector<GroupElement> atoms;
    std::vector<double> weights;
    for (const auto& row : arr) {
        if (!row.is_array() || row.size() != 9)
            throw config_error("measure JSON: each atom needs 8 entry reals plus a weight");
        const auto v = row.get<std::vector<double>>();
        atoms.emplace_back(cplx(v[0], v[1]), cplx(v[2], v[3]), cplx(v[4], v[5]), cplx(v[6], v[7]));
        weights.push_back(v[8]);
    }
    return MatrixMeasure::atomic(std::move(atoms), std::move(weights));
}

inline json measure_to_json(const MatrixMeasure& mu) {
    json arr = json::array();
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
        const GroupElement& g = mu.atoms[i];
        arr.push_back({g.a.real(), g.a.imag(), g.b.real(), g.b.imag(), g.c.real(), g.c.imag(),
                       g.d.real(), g.d.imag(), mu.weights[i]});
    }
    return json{{"atoms", arr}};
}

// resolve a fixture name or a path to a JSON file
inline MatrixMeasure resolve_fixture(const std::string& name_or_path) {
    try {
        return fixture(name_or_path);
    } catch (const config_error&) {
        std::ifstream is(name_or_path);
        if (!is) throw config_error("fixture not found (neither built-in nor file): " +
                                    name_or_path);
        json doc;
        is >> doc;
        return measure_from_json(doc);
    }
}

// ---------------------------------------------------------------------------
// ExperimentConfig: flat JSON with dotted keys; unknown keys are errors.
// Every read is recorded so the consumed defaults can be echoed verbatim.
// ---------------------------------------------------------------------------

class ExperimentConfig {
  public:
    ExperimentConfig() : doc_(json::object()) {}

    explicit ExperimentConfig(json doc) : doc_(std::move(doc)) {
        if (!doc_.is_object()) throw config_error("config: top-level JSON object required");
        for (const auto& [key, value] : doc_.items()) {
            if (!value.is_primitive()) throw config_error("config: flat keys only: " + key);
            unused_.insert(key);
        }
    }

    static ExperimentConfig from_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw config_error("config: cannot open " + path);
        json doc;
        is >> doc;
        return ExperimentConfig(std::move(doc));
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        unused_.erase(key);
        T value = fallback;
        if (doc_.contains(key)) value = doc_.at(key).get<T>();
        echo_[key] = value;
        return value;
    }

    void override_value(const std::string& key, const json& v) { doc_[key] = v; }

    // fail-closed: any key never consumed by the subcommand is a config error
    void finish() const {
        if (!unused_.empty())
            throw config_error("config: unknown key '" + *unused_.begin() + "'");
    }

    const json& echo() const { return echo_; }

  private:
    json doc_;
    json echo_ = json::object();
    std::set<std::string> unused_;
};

// ---------------------------------------------------------------------------
// CSV writer: header row, comma separators, '.' decimals, LF endings
// ---------------------------------------------------------------------------

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : os_(path) {
        if (!os_) throw std::runtime_error("csv: cannot open " + path);
        for (std::size_t i = 0; i < header.size(); ++i)
            os_ << header[i] << (i + 1 < header.size() ? "," : "");
        os_ << "\n";
    }

    void row(const std::vector<double>& values) {
        char buf[64];
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", values[i]);
            os_ << buf << (i + 1 < values.size() ? "," : "");
        }
        os_ << "\n";
    }

  private:
    std::ofstream os_;
};

inline void write_summary(const std::filesystem::path& dir, const json& summary) {
    std::ofstream os(dir / "summary.json");
    os << summary.dump(2) << "\n";
}

}  // namespace sl2dyn

#pragma once

// Plain-text reports: a timestamp line, a key-value header carrying the
// configuration hash and the tolerances in force, then tabular sections.
// Everything after the first line is a deterministic function of the inputs.

#include "error.hpp"

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace mfe {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ull)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

/// Named acceptance tolerances; every value is multiplied by `scale`.
class Tolerances {
public:
    explicit Tolerances(double scale = 1.0) : scale_(scale)
    {
        if (!(scale > 0.0)) throw InputError("tolerance scale must be positive");
        base_ = {
            {"robin.disk", 1e-6},
            {"robin.convergence", 1e-6},
            {"strip.closed_form", 1e-10},
            {"gamma.max", 1e-4},
            {"gamma.disk", 1e-5},
            {"gamma.excess", 1e-3},
            {"energy.disk", 1e-2},
            {"energy.positive", 1e-3},
            {"theorem1.floor", 1e-2},
            {"theorem1.excess", 4.0 * 3.14159265358979323846 * 1e-3},
            {"rearrangement.compare", 1e-2},
            {"testfn.bound", 5e-2},
            {"bubble.distance", 5e-2},
            {"bubble.d_eps", 1e-2},
            {"bubble.mass", 2e-2},
            {"mt.slack", 1e-3},
            {"ps.relative", 1e-2},
            {"fd.relative", 1e-6},
            {"phi.upper", 1e-2},
        };
    }

    double scale() const { return scale_; }

    double operator[](const std::string& name) const
    {
        const auto it = base_.find(name);
        if (it == base_.end()) throw InputError("unknown tolerance '" + name + "'");
        return it->second * scale_;
    }

    std::vector<std::pair<std::string, double>> list() const
    {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& [k, v] : base_) out.emplace_back(k, v * scale_);
        return out;
    }

private:
    double scale_ = 1.0;
    std::map<std::string, double> base_;
};

class Report {
public:
    explicit Report(std::string command) : command_(std::move(command)) {}

    void set(const std::string& key, const std::string& value) { header_.emplace_back(key, value); }

    void set(const std::string& key, double value)
    {
        std::ostringstream os;
        os << std::setprecision(12) << value;
        set(key, os.str());
    }

    void section(const std::string& name, const std::string& body) { sections_.emplace_back(name, body); }

    /// Records a tripped gate; the report then renders `status = failed`.
    void fail(const std::string& gate) { failures_.push_back(gate); }

    bool ok() const { return failures_.empty(); }
    const std::vector<std::string>& failures() const { return failures_; }
    const std::string& command() const { return command_; }

    std::string body() const
    {
        std::ostringstream os;
        os << "command = " << command_ << '\n';
        for (const auto& [k, v] : header_) os << k << " = " << v << '\n';
        for (const auto& [name, text] : sections_) {
            os << "\n[" << name << "]\n" << text;
            if (!text.empty() && text.back() != '\n') os << '\n';
        }
        os << "\nstatus = " << (ok() ? "ok" : "failed") << '\n';
        for (const auto& f : failures_) os << "gate_failed = " << f << '\n';
        return os.str();
    }

    std::string render(const std::string& timestamp) const { return "# generated " + timestamp + "\n" + body(); }

private:
    std::string command_;
    std::vector<std::pair<std::string, std::string>> header_;
    std::vector<std::pair<std::string, std::string>> sections_;
    std::vector<std::string> failures_;
};

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// Writes through a temporary file so that a failed run never leaves a
/// truncated report behind.
inline void write_report_file(const std::filesystem::path& path, const std::string& text)
{
    std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw InputError("cannot write '" + tmp + "'");
        out << text;
        if (!out) throw InputError("write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

} // namespace mfe

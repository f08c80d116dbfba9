#pragma once

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

// Canned figure pipelines used by `reproduce` and by the acceptance suite.
// A plan is a JSON object; keys missing from it fall back to the figure defaults.

namespace microdim::experiments {

struct Check {
    std::string name;
    std::string expected;
    std::string observed;
    bool pass = false;
    bool informational = false; // reported, never fails the figure
};

struct Report {
    std::string figure;
    std::vector<Check> checks;

    bool all_passed() const;
    std::string text() const;
};

using Logger = std::function<void(const std::string&)>;

const std::vector<std::string>& figure_ids();

/// Default plan for a figure id; throws ValidationError for unknown ids.
nlohmann::json default_plan(const std::string& id);

/// Runs the figure pipeline, writing CSV/SVG artifacts, plan.json and report.txt into `out`.
Report run_figure(const std::string& id, const nlohmann::json& plan, const std::filesystem::path& out,
                  const Logger& log = {});

} // namespace microdim::experiments

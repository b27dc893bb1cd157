#pragma once

// Shared pass/fail reporting for numeric condition checks. Each entry records
// the largest observed constant for one named condition together with the
// sample point that produced it.

#include <string>
#include <string_view>
#include <vector>

#include <mixedsde/core.hpp>

namespace mixedsde {

struct ConditionEntry {
    std::string name;
    double observed = 0.0;
    double threshold = 0.0;
    bool passed = false;
    std::string witness;
};

struct ConditionReport {
    std::vector<ConditionEntry> entries;
    // Checkers based on sampling state their evidentiary limits here.
    std::string note;

    bool passed() const {
        for (const auto& e : entries)
            if (!e.passed) return false;
        return true;
    }

    const ConditionEntry* find(std::string_view name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }

    const ConditionEntry& at(std::string_view name) const {
        const ConditionEntry* e = find(name);
        require(e != nullptr, Errc::invalid_argument, "no such condition entry", "condition");
        return *e;
    }
};

}  // namespace mixedsde

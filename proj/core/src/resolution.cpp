#include "fpd/resolution.hpp"

#include <string>

#include "fpd/error.hpp"

namespace fpd {

std::string_view to_string(Resolution r) noexcept {
    switch (r) {
    case Resolution::FiveMin: return "5min";
    case Resolution::TenMin: return "10min";
    case Resolution::Hourly: return "hourly";
    case Resolution::Daily: return "daily";
    case Resolution::Monthly: return "monthly";
    case Resolution::Yearly: return "yearly";
    case Resolution::Transient: return "transient";
    }
    return "unknown";
}

Resolution parse_resolution(std::string_view name) {
    if (name == "5min" || name == "5-min" || name == "five_min") return Resolution::FiveMin;
    if (name == "10min" || name == "10-min" || name == "ten_min") return Resolution::TenMin;
    if (name == "hourly" || name == "1h" || name == "hour") return Resolution::Hourly;
    if (name == "daily" || name == "day") return Resolution::Daily;
    if (name == "monthly" || name == "month") return Resolution::Monthly;
    if (name == "yearly" || name == "year") return Resolution::Yearly;
    if (name == "transient") return Resolution::Transient;
    throw ArgumentError("unknown resolution '" + std::string(name) + "'");
}

bool in_chain(Resolution r) noexcept {
    return r != Resolution::TenMin && r != Resolution::Transient;
}

int chain_rank(Resolution r) {
    switch (r) {
    case Resolution::FiveMin: return 0;
    case Resolution::Hourly: return 1;
    case Resolution::Daily: return 2;
    case Resolution::Monthly: return 3;
    case Resolution::Yearly: return 4;
    default:
        throw ArgumentError("resolution '" + std::string(to_string(r)) +
                            "' is not part of the steady-state chain");
    }
}

std::optional<Resolution> next_resolution(Resolution r) noexcept {
    switch (r) {
    case Resolution::FiveMin: return Resolution::Hourly;
    case Resolution::Hourly: return Resolution::Daily;
    case Resolution::Daily: return Resolution::Monthly;
    case Resolution::Monthly: return Resolution::Yearly;
    default: return std::nullopt;
    }
}

std::optional<Resolution> previous_resolution(Resolution r) noexcept {
    switch (r) {
    case Resolution::Hourly: return Resolution::FiveMin;
    case Resolution::Daily: return Resolution::Hourly;
    case Resolution::Monthly: return Resolution::Daily;
    case Resolution::Yearly: return Resolution::Monthly;
    default: return std::nullopt;
    }
}

std::size_t segment_length(Resolution r) {
    switch (r) {
    case Resolution::FiveMin: return 12;
    case Resolution::Hourly: return 24;
    case Resolution::Daily: return 31;
    case Resolution::Monthly: return 12;
    case Resolution::Transient: return 960;
    default:
        throw ArgumentError("no segment length defined for '" + std::string(to_string(r)) + "'");
    }
}

std::size_t intervals_per_hour(Resolution r) {
    switch (r) {
    case Resolution::FiveMin: return 12;
    case Resolution::TenMin: return 6;
    case Resolution::Hourly: return 1;
    default:
        throw ArgumentError("resolution '" + std::string(to_string(r)) +
                            "' is coarser than hourly");
    }
}

bool is_module_level(Resolution level) noexcept {
    return level == Resolution::Hourly || level == Resolution::Daily ||
           level == Resolution::Monthly || level == Resolution::Yearly;
}

Resolution module_input(Resolution level) {
    if (!is_module_level(level)) {
        throw ArgumentError("'" + std::string(to_string(level)) + "' is not an extractor level");
    }
    return *previous_resolution(level);
}

std::vector<Resolution> levels_between(Resolution entry, Resolution target) {
    if (!in_chain(entry) || !is_module_level(target)) {
        throw ArgumentError("levels_between: entry must be a chain resolution and target a "
                            "module level");
    }
    if (chain_rank(entry) >= chain_rank(target)) {
        throw ArgumentError("entry resolution '" + std::string(to_string(entry)) +
                            "' must be finer than target '" + std::string(to_string(target)) +
                            "'");
    }
    std::vector<Resolution> out;
    for (auto r = next_resolution(entry); r; r = next_resolution(*r)) {
        out.push_back(*r);
        if (*r == target) {
            break;
        }
    }
    return out;
}

}  // namespace fpd

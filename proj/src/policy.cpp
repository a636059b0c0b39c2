#include "chainexit/policy.hpp"

#include <cmath>
#include <string>

#include "chainexit/error.hpp"

namespace chainexit
{

FeedbackMode parse_feedback_mode(std::string_view name)
{
    if (name == "joint")
        return FeedbackMode::joint;
    if (name == "own" || name == "own_state")
        return FeedbackMode::own_state;
    throw ConfigError("unknown feedback mode '" + std::string(name) + "'");
}

std::string_view to_string(FeedbackMode mode)
{
    return mode == FeedbackMode::joint ? "joint" : "own_state";
}

SubsystemPolicy SubsystemPolicy::constant(std::size_t index)
{
    SubsystemPolicy p;
    p.choice = {static_cast<std::uint32_t>(index)};
    return p;
}

std::size_t SubsystemPolicy::lookup(std::span<const double> x) const noexcept
{
    std::size_t flat = 0;
    for (const auto& axis : axes)
    {
        std::size_t k = 0;
        if (axis.count > 1)
        {
            double pos = std::round((x[axis.coordinate] - axis.origin) / axis.spacing);
            if (pos > 0)
            {
                k = pos >= static_cast<double>(axis.count - 1)
                        ? axis.count - 1
                        : static_cast<std::size_t>(pos);
            }
        }
        flat = flat * axis.count + k;
    }
    return choice[flat];
}

PolicyTable::PolicyTable(std::vector<SubsystemPolicy> subsystems, FeedbackMode mode)
    : subsystems_(std::move(subsystems)), mode_(mode)
{
    for (const auto& s : subsystems_)
    {
        std::size_t expected = 1;
        for (const auto& a : s.axes)
            expected *= a.count;
        if (expected != s.choice.size())
        {
            throw SpecError("policy table has " + std::to_string(s.choice.size())
                            + " entries but its grid has "
                            + std::to_string(expected) + " nodes");
        }
    }
}

PolicyTable PolicyTable::constant(std::span<const std::size_t> indices)
{
    std::vector<SubsystemPolicy> subs;
    subs.reserve(indices.size());
    for (auto idx : indices)
        subs.push_back(SubsystemPolicy::constant(idx));
    return PolicyTable(std::move(subs));
}

PolicyTable PolicyTable::with(std::size_t i, SubsystemPolicy policy) const
{
    PolicyTable copy = *this;
    copy.subsystems_.at(i) = std::move(policy);
    return copy;
}

}  // namespace chainexit

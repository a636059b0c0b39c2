#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace chainexit
{

//! What a subsystem's feedback law is allowed to look at.
enum class FeedbackMode
{
    joint,      //!< full state of levels 1..i
    own_state,  //!< state of subsystem i only
};

FeedbackMode parse_feedback_mode(std::string_view name);
std::string_view to_string(FeedbackMode mode);

//! Uniformly spaced sample nodes along one flattened state coordinate.
struct PolicyAxis
{
    std::size_t coordinate = 0;
    double origin = 0;
    double spacing = 1;
    std::size_t count = 1;

    bool operator==(const PolicyAxis&) const = default;
};

//! Control-set index per node of a tensor grid; nearest-node lookup.
struct SubsystemPolicy
{
    //! Empty axes means a constant policy with a single entry in choice.
    std::vector<PolicyAxis> axes;
    std::vector<std::uint32_t> choice{0};

    static SubsystemPolicy constant(std::size_t index);

    //! Total on R^D: coordinates outside the table clamp to the edge node.
    std::size_t lookup(std::span<const double> x) const noexcept;
    std::size_t node_count() const noexcept { return choice.size(); }

    bool operator==(const SubsystemPolicy&) const = default;
};

//---------------------------------------------------------------------------//
/*!
 * Stationary Markov control: one feedback table per subsystem.
 *
 * choose() returns an index into the subsystem's finite control set.
 */
class PolicyTable
{
  public:
    PolicyTable() = default;
    explicit PolicyTable(std::vector<SubsystemPolicy> subsystems,
                         FeedbackMode mode = FeedbackMode::joint);

    static PolicyTable constant(std::span<const std::size_t> indices);

    std::size_t choose(std::size_t subsystem, std::span<const double> x) const noexcept
    {
        return subsystems_[subsystem].lookup(x);
    }

    std::size_t size() const noexcept { return subsystems_.size(); }
    const SubsystemPolicy& subsystem(std::size_t i) const { return subsystems_.at(i); }
    FeedbackMode mode() const noexcept { return mode_; }

    //! Copy with subsystem i replaced.
    PolicyTable with(std::size_t i, SubsystemPolicy policy) const;

    bool operator==(const PolicyTable&) const = default;

  private:
    std::vector<SubsystemPolicy> subsystems_;
    FeedbackMode mode_ = FeedbackMode::joint;
};

}  // namespace chainexit

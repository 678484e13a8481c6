// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string_view>

namespace tiersplit {

/// Computing tier. Data flows device -> edge -> cloud; the enumerator value is
/// the tier's rank, so a smaller value is the "earlier" (more device-ward) tier.
enum class Tier : std::uint8_t { device = 0, edge = 1, cloud = 2 };

inline constexpr std::array<Tier, 3> kTiers{Tier::device, Tier::edge, Tier::cloud};

constexpr int rank(Tier t) { return static_cast<int>(t); }
constexpr Tier tier_from_rank(int r) { return static_cast<Tier>(r); }

constexpr char tier_letter(Tier t) {
    switch (t) {
        case Tier::device: return 'd';
        case Tier::edge: return 'e';
        case Tier::cloud: return 'c';
    }
    return '?';
}

constexpr std::string_view tier_name(Tier t) {
    switch (t) {
        case Tier::device: return "device";
        case Tier::edge: return "edge";
        case Tier::cloud: return "cloud";
    }
    return "?";
}

/// Accepts "d"/"e"/"c" as well as the full names.
constexpr std::optional<Tier> parse_tier(std::string_view text) {
    for (Tier t : kTiers) {
        if (text.size() == 1 && text[0] == tier_letter(t)) return t;
        if (text == tier_name(t)) return t;
    }
    return std::nullopt;
}

/// Small bitset over the three tiers.
class TierSet {
public:
    constexpr TierSet() = default;
    constexpr TierSet(std::initializer_list<Tier> tiers) {
        for (Tier t : tiers) insert(t);
    }

    constexpr void insert(Tier t) { bits_ |= static_cast<std::uint8_t>(1u << rank(t)); }
    constexpr bool contains(Tier t) const { return (bits_ >> rank(t)) & 1u; }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr int size() const { return (bits_ & 1) + ((bits_ >> 1) & 1) + ((bits_ >> 2) & 1); }
    constexpr bool operator==(const TierSet&) const = default;

private:
    std::uint8_t bits_ = 0;
};

}  // namespace tiersplit

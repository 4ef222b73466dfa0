#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nullstate/packet.hpp"

namespace nullstate::packet {

struct ContextEntry {
    ContextCode code;
    std::string label;
    bool fixed = false;
};

/// Injective map between environment descriptions and 5-bit context codes.
/// The five built-in entries cannot be replaced or removed.
class ContextRegistry {
public:
    ContextRegistry();

    /// Throws codec_error(registry) on a duplicate code or label, or a code
    /// without the source-present bit.
    void register_context(ContextCode code, std::string label);

    std::optional<ContextCode> find(std::string_view label) const;
    std::optional<std::string> label_of(ContextCode code) const;
    ContextCode at(std::string_view label) const;

    const std::vector<ContextEntry>& entries() const noexcept { return entries_; }

    /// Bits that distinguish Bob's code from Alice's.
    static constexpr std::uint8_t person_bits() { return contexts::alice_lab.bits ^ contexts::bob.bits; }
    /// Bits that distinguish a photograph of Alice from Alice herself.
    static constexpr std::uint8_t photo_bits() { return contexts::alice_lab.bits ^ contexts::alice_photo.bits; }
    /// Bits that distinguish L' from L (A',L' versus A' at L).
    static constexpr std::uint8_t location_bits() {
        return contexts::alice_away.bits ^ contexts::alice_photo.bits;
    }
    /// Source-present and memory flag.
    static constexpr std::uint8_t reality_bits() { return 0b11000; }

private:
    std::vector<ContextEntry> entries_;
};

/// Alice in her laboratory at a different location: R,T_i,A,L'.
inline constexpr ContextCode alice_elsewhere{
    static_cast<std::uint8_t>(contexts::alice_lab.bits ^ ContextRegistry::location_bits())};

}  // namespace nullstate::packet

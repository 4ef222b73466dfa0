#include "nullstate/context_registry.hpp"

#include <algorithm>

namespace nullstate::packet {

ContextRegistry::ContextRegistry()
    : entries_{
          {contexts::alice_lab, "R,T_i,A,L", true},
          {contexts::alice_away, "R,T_i,A',L'", true},
          {contexts::bob, "R,T_i,B", true},
          {contexts::alice_photo, "R,T_i,A' photo", true},
          {contexts::memory, "M,T_j", true},
      } {}

void ContextRegistry::register_context(ContextCode code, std::string label) {
    if (code.bits >> kContextBits) throw codec_error(codec_error::kind::registry, "context code wider than 5 bits");
    if (!code.source_present()) {
        throw codec_error(codec_error::kind::registry, "context code must carry the source-present bit");
    }
    for (const auto& e : entries_) {
        if (e.code == code) {
            throw codec_error(codec_error::kind::registry,
                              "code " + to_bits(code.bits, kContextBits) + " already registered as '" + e.label + "'");
        }
        if (e.label == label) throw codec_error(codec_error::kind::registry, "label '" + label + "' already registered");
    }
    entries_.push_back({code, std::move(label), false});
}

std::optional<ContextCode> ContextRegistry::find(std::string_view label) const {
    auto it = std::ranges::find(entries_, label, &ContextEntry::label);
    if (it == entries_.end()) return std::nullopt;
    return it->code;
}

std::optional<std::string> ContextRegistry::label_of(ContextCode code) const {
    auto it = std::ranges::find(entries_, code, &ContextEntry::code);
    if (it == entries_.end()) return std::nullopt;
    return it->label;
}

ContextCode ContextRegistry::at(std::string_view label) const {
    if (auto code = find(label)) return *code;
    throw codec_error(codec_error::kind::registry, "no context labelled '" + std::string(label) + "'");
}

}  // namespace nullstate::packet

#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace artai {

struct ItemRecord {
    std::string item_id;
    std::string title;
    std::optional<std::string> category_label;

    bool operator==(const ItemRecord&) const = default;
};

enum class EventType { view, like, comment };

struct InteractionEvent {
    std::string user_id;
    std::string item_id;
    int64_t timestamp = 0;
    EventType event_type = EventType::view;

    bool operator==(const InteractionEvent&) const = default;
};

}  // namespace artai

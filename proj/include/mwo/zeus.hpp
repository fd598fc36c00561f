#pragma once

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace mwo {

// ZEUS block 02-08 ("maintenance type"). Only these ten identifiers exist.
class ZeusCode {
 public:
  enum class Id : unsigned char {
    corrective,            // 02-08-01
    corrective_deferred,   // 02-08-01-01
    corrective_immediate,  // 02-08-01-02
    preventive,            // 02-08-02
    predetermined,         // 02-08-02-01
    condition_based,       // 02-08-02-02
    predictive,            // 02-08-02-03
    undefined,             // 02-08-97
    unresolved,            // 02-08-96
    insignificant,         // 02-08-XX
  };

  static constexpr std::size_t count = 10;

  constexpr ZeusCode(Id id) : id_(id) {}  // NOLINT(google-explicit-constructor)

  static std::optional<ZeusCode> parse(std::string_view text) {
    for (std::size_t i = 0; i < count; ++i)
      if (table()[i].code == text) return ZeusCode(static_cast<Id>(i));
    return std::nullopt;
  }

  constexpr Id id() const { return id_; }
  std::string_view code() const { return table()[index()].code; }
  std::string_view name() const { return table()[index()].name; }
  int level() const { return table()[index()].level; }

  // Level-4 codes map to their level-3 parent by string prefix.
  ZeusCode level3() const {
    if (level() == 3) return *this;
    return *parse(code().substr(0, 8));
  }

  static const std::array<ZeusCode, count>& all() {
    static const std::array<ZeusCode, count> codes{
        Id::corrective,    Id::corrective_deferred, Id::corrective_immediate, Id::preventive,
        Id::predetermined, Id::condition_based,     Id::predictive,           Id::undefined,
        Id::unresolved,    Id::insignificant};
    return codes;
  }

  friend bool operator==(ZeusCode a, ZeusCode b) { return a.id_ == b.id_; }
  // Ordering is lexicographic on the code string, which is also the argmax
  // tie-breaking order of the classifiers.
  friend std::strong_ordering operator<=>(ZeusCode a, ZeusCode b) {
    int c = a.code().compare(b.code());
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  struct Entry {
    std::string_view code;
    int level;
    std::string_view name;
  };

  static const std::array<Entry, count>& table() {
    static constexpr std::array<Entry, count> entries{{
        {"02-08-01", 3, "corrective maintenance"},
        {"02-08-01-01", 4, "deferred corrective maintenance"},
        {"02-08-01-02", 4, "immediate corrective maintenance"},
        {"02-08-02", 3, "preventive maintenance"},
        {"02-08-02-01", 4, "predetermined maintenance"},
        {"02-08-02-02", 4, "condition based maintenance"},
        {"02-08-02-03", 4, "predictive maintenance"},
        {"02-08-97", 3, "undefined maintenance type"},
        {"02-08-96", 3, "unresolved maintenance type"},
        {"02-08-XX", 3, "insignificant attribute"},
    }};
    return entries;
  }

  std::size_t index() const { return static_cast<std::size_t>(id_); }

  Id id_;
};

inline constexpr ZeusCode kCorrective{ZeusCode::Id::corrective};

}  // namespace mwo

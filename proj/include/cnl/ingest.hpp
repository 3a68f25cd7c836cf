#pragma once

// ACLED-style event ingestion: CSV reading, actor canonicalization against a
// catalog, and record filtering.

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstddef>
#include <ctime>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cnl/error.hpp"
#include "cnl/geo_point.hpp"

namespace cnl {

inline constexpr std::string_view kSchemaVersion = "1";

using Date = std::chrono::year_month_day;

namespace detail {

inline std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

// Trim and collapse interior whitespace runs to one space.
inline std::string normalize_space(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(static_cast<char>(c));
  }
  return out;
}

inline std::string fold_case(std::string_view s) {
  std::string out = normalize_space(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string alnum_lower(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dates

inline std::optional<Date> parse_date(std::string_view text, const std::string& format) {
  std::tm tm{};
  std::istringstream in{detail::trim(text)};
  in >> std::get_time(&tm, format.c_str());
  if (in.fail()) return std::nullopt;
  in >> std::ws;
  if (!in.eof()) return std::nullopt;
  Date d{std::chrono::year{tm.tm_year + 1900}, std::chrono::month{unsigned(tm.tm_mon + 1)},
         std::chrono::day{unsigned(tm.tm_mday)}};
  if (!d.ok()) return std::nullopt;
  return d;
}

inline std::string format_iso(const Date& d) {
  std::ostringstream out;
  out << std::setfill('0') << std::setw(4) << int(d.year()) << '-' << std::setw(2)
      << unsigned(d.month()) << '-' << std::setw(2) << unsigned(d.day());
  return out.str();
}

inline std::optional<Date> parse_iso_date(std::string_view text) {
  return parse_date(text, "%Y-%m-%d");
}

inline long days_between(const Date& from, const Date& to) {
  return (std::chrono::sys_days{to} - std::chrono::sys_days{from}).count();
}

// ---------------------------------------------------------------------------
// Event types and actor categories

enum class EventType {
  BattleNoChange,
  BattleNonStateOvertakes,
  BattleGovernmentRegains,
  RiotsProtests,
  ViolenceAgainstCivilians,
  RemoteViolence,
  Other,
};

inline constexpr std::array<EventType, 7> kAllEventTypes = {
    EventType::BattleNoChange,         EventType::BattleNonStateOvertakes,
    EventType::BattleGovernmentRegains, EventType::RiotsProtests,
    EventType::ViolenceAgainstCivilians, EventType::RemoteViolence,
    EventType::Other};

inline std::string_view to_label(EventType t) {
  switch (t) {
    case EventType::BattleNoChange: return "Battle-No change of territory";
    case EventType::BattleNonStateOvertakes: return "Battle-Non-state actor overtakes territory";
    case EventType::BattleGovernmentRegains: return "Battle-Government regains territory";
    case EventType::RiotsProtests: return "Riots/Protests";
    case EventType::ViolenceAgainstCivilians: return "Violence against civilians";
    case EventType::RemoteViolence: return "Remote violence";
    case EventType::Other: return "Other";
  }
  return "Other";
}

/// Matching ignores case, spacing and punctuation, so "Battle – no change of
/// territory" and "Battle-No change of territory" are the same type. Unknown
/// labels map to Other.
inline EventType parse_event_type(std::string_view label) {
  const std::string key = detail::alnum_lower(label);
  for (EventType t : kAllEventTypes) {
    if (t != EventType::Other && detail::alnum_lower(to_label(t)) == key) return t;
  }
  return EventType::Other;
}

enum class Category { Government, Rebels, Militias, Civilians, Islamists, External };

inline constexpr std::array<Category, 6> kAllCategories = {
    Category::Government, Category::Rebels,    Category::Militias,
    Category::Civilians,  Category::Islamists, Category::External};

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::Government: return "government";
    case Category::Rebels: return "rebels";
    case Category::Militias: return "militias";
    case Category::Civilians: return "civilians";
    case Category::Islamists: return "islamists";
    case Category::External: return "external";
  }
  return "militias";
}

inline std::optional<Category> parse_category(std::string_view s) {
  const std::string key = detail::fold_case(s);
  for (Category c : kAllCategories) {
    if (to_string(c) == key) return c;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Actor catalog

struct ActorRef {
  std::string id;
  Category category;
  bool matched;  // false when the name fell through to the fallback
};

class ActorCatalog {
 public:
  struct Entry {
    std::vector<std::string> aliases;
    Category category;
  };

  explicit ActorCatalog(Category fallback = Category::Militias) : fallback_(fallback) {}

  ActorCatalog(std::map<std::string, Entry> entries, Category fallback = Category::Militias)
      : fallback_(fallback) {
    for (auto& [name, entry] : entries) add(name, std::move(entry));
  }

  /// Adds a canonical name. Throws InvalidCatalog if the name or one of its
  /// aliases already resolves to a different canonical entry.
  void add(const std::string& canonical, Entry entry) {
    const std::string id = detail::normalize_space(canonical);
    if (id.empty()) throw Error(ErrorCode::InvalidCatalog, "empty canonical name");
    auto claim = [&](std::map<std::string, std::string>& index, const std::string& key) {
      auto [it, inserted] = index.emplace(key, id);
      if (!inserted && it->second != id) {
        throw Error(ErrorCode::InvalidCatalog,
                    "'" + key + "' claimed by both '" + it->second + "' and '" + id + "'");
      }
    };
    claim(by_name_, detail::fold_case(id));
    for (const auto& alias : entry.aliases) {
      const std::string key = detail::fold_case(alias);
      if (key.empty()) throw Error(ErrorCode::InvalidCatalog, "empty alias for '" + id + "'");
      claim(by_alias_, key);
    }
    entries_[id] = std::move(entry);
    for (const auto& [key, owner] : by_alias_) {
      auto hit = by_name_.find(key);
      if (hit != by_name_.end() && hit->second != owner) {
        throw Error(ErrorCode::InvalidCatalog,
                    "alias '" + key + "' of '" + owner + "' is the canonical name '" +
                        hit->second + "'");
      }
    }
  }

  ActorRef canonicalize(std::string_view raw) const {
    const std::string cleaned = detail::normalize_space(raw);
    if (cleaned.empty()) throw Error(ErrorCode::EmptyName, "actor name is blank");
    const std::string key = detail::fold_case(cleaned);
    for (const auto* index : {&by_name_, &by_alias_}) {
      if (auto it = index->find(key); it != index->end()) {
        return {it->second, entries_.at(it->second).category, true};
      }
    }
    return {cleaned, fallback_, false};
  }

  Category category_of(const std::string& id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? fallback_ : it->second.category;
  }

  Category fallback() const { return fallback_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  /// {"schema_version": "1", "fallback_category": "militias",
  ///  "actors": {"<canonical>": {"aliases": [...], "category": "<category>"}}}
  static ActorCatalog from_json(const nlohmann::json& doc) {
    check_schema(doc, "catalog");
    Category fallback = Category::Militias;
    if (doc.contains("fallback_category")) {
      auto c = parse_category(doc.at("fallback_category").get<std::string>());
      if (!c) throw Error(ErrorCode::InvalidCatalog, "unknown fallback_category");
      fallback = *c;
    }
    ActorCatalog catalog(fallback);
    if (!doc.contains("actors")) return catalog;
    for (const auto& [name, body] : doc.at("actors").items()) {
      Entry entry{{}, fallback};
      if (body.contains("aliases")) entry.aliases = body.at("aliases").get<std::vector<std::string>>();
      auto c = parse_category(body.at("category").get<std::string>());
      if (!c) {
        throw Error(ErrorCode::InvalidCatalog, "actor '" + name + "' has unknown category '" +
                                                   body.at("category").get<std::string>() + "'");
      }
      entry.category = *c;
      catalog.add(name, std::move(entry));
    }
    return catalog;
  }

  static void check_schema(const nlohmann::json& doc, std::string_view what) {
    if (!doc.is_object() || !doc.contains("schema_version") ||
        doc.at("schema_version") != std::string(kSchemaVersion)) {
      throw Error(ErrorCode::SchemaMismatch,
                  std::string(what) + " document lacks schema_version \"" +
                      std::string(kSchemaVersion) + "\"");
    }
  }

 private:
  Category fallback_;
  std::map<std::string, Entry> entries_;
  std::map<std::string, std::string> by_name_;   // folded canonical -> canonical
  std::map<std::string, std::string> by_alias_;  // folded alias -> canonical
};

inline ActorRef canonicalize_actor(std::string_view raw_name, const ActorCatalog& catalog) {
  return catalog.canonicalize(raw_name);
}

// ---------------------------------------------------------------------------
// Column mapping

enum class Field {
  Id, Date, EventType, Country, Latitude, Longitude, ActorA, ActorB, ActorC, ActorD, Fatalities
};

inline constexpr std::array<std::pair<Field, std::string_view>, 11> kFieldNames = {{
    {Field::Id, "id"},
    {Field::Date, "date"},
    {Field::EventType, "event_type"},
    {Field::Country, "country"},
    {Field::Latitude, "latitude"},
    {Field::Longitude, "longitude"},
    {Field::ActorA, "actor_a"},
    {Field::ActorB, "actor_b"},
    {Field::ActorC, "actor_c"},
    {Field::ActorD, "actor_d"},
    {Field::Fatalities, "fatalities"},
}};

struct ColumnMapping {
  std::map<Field, std::string> headers;
  std::string date_format = "%d %B %Y";

  /// ACLED v5 column names. ALLY_ACTOR_1 assists the attacker, ALLY_ACTOR_2
  /// the target.
  static ColumnMapping acled_v5() {
    return {{{Field::Id, "EVENT_ID_CNTY"},
             {Field::Date, "EVENT_DATE"},
             {Field::EventType, "EVENT_TYPE"},
             {Field::Country, "COUNTRY"},
             {Field::Latitude, "LATITUDE"},
             {Field::Longitude, "LONGITUDE"},
             {Field::ActorA, "ACTOR1"},
             {Field::ActorB, "ALLY_ACTOR_1"},
             {Field::ActorC, "ACTOR2"},
             {Field::ActorD, "ALLY_ACTOR_2"},
             {Field::Fatalities, "FATALITIES"}},
            "%d %B %Y"};
  }

  void validate() const {
    for (const auto& [field, name] : kFieldNames) {
      auto it = headers.find(field);
      if (it == headers.end() || detail::trim(it->second).empty()) {
        throw Error(ErrorCode::InvalidMapping, "logical field '" + std::string(name) + "' unmapped");
      }
    }
    if (date_format.empty()) throw Error(ErrorCode::InvalidMapping, "empty date_format");
  }

  /// {"schema_version": "1", "date_format": "%d %B %Y",
  ///  "columns": {"id": "EVENT_ID_CNTY", ...}}. Missing columns keep their
  /// ACLED v5 defaults.
  static ColumnMapping from_json(const nlohmann::json& doc) {
    ActorCatalog::check_schema(doc, "column mapping");
    ColumnMapping m = acled_v5();
    if (doc.contains("date_format")) m.date_format = doc.at("date_format").get<std::string>();
    if (doc.contains("columns")) {
      for (const auto& [key, value] : doc.at("columns").items()) {
        auto it = std::find_if(kFieldNames.begin(), kFieldNames.end(),
                               [&](const auto& f) { return f.second == key; });
        if (it == kFieldNames.end()) {
          throw Error(ErrorCode::InvalidMapping, "unknown logical field '" + key + "'");
        }
        m.headers[it->first] = value.get<std::string>();
      }
    }
    m.validate();
    return m;
  }
};

// ---------------------------------------------------------------------------
// CSV (RFC 4180)

/// Splits CSV text into rows of fields. Quoted fields may contain commas,
/// doubled quotes and line breaks. A UTF-8 BOM is skipped.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"': in_quotes = true; break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        [[fallthrough]];
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        any = false;
        break;
      default: field.push_back(c);
    }
  }
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Events

struct EventRecord {
  std::string id;
  Date date;
  EventType event_type = EventType::Other;
  std::string country;
  std::optional<GeoPoint> location;  // absent when coordinates are unusable
  std::optional<std::string> actor_a;
  std::optional<std::string> actor_b;
  std::optional<std::string> actor_c;
  std::optional<std::string> actor_d;
  long fatalities = 0;

  std::array<const std::optional<std::string>*, 4> actors() const {
    return {&actor_a, &actor_b, &actor_c, &actor_d};
  }

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct RowError {
  std::size_t row;  // 1-based data row (the header is row 0)
  std::string reason;
};

struct ParseResult {
  std::vector<EventRecord> records;
  std::vector<RowError> errors;
  std::map<std::string, Category> actors;  // every canonical actor seen
};

/// Parses mapped columns of ACLED-style CSV. Rows lacking a parseable date or
/// an actor_a, or carrying a malformed fatality count, become RowErrors; the
/// rest become records. Missing or out-of-range coordinates leave the record
/// without a location.
inline ParseResult parse_events(std::string_view csv_text, const ColumnMapping& mapping,
                                const ActorCatalog& catalog) {
  mapping.validate();
  auto rows = parse_csv(csv_text);
  if (rows.empty()) throw Error(ErrorCode::MalformedHeader, "no header row");

  std::map<Field, std::size_t> col;
  const auto& header = rows.front();
  for (const auto& [field, name] : mapping.headers) {
    auto it = std::find_if(header.begin(), header.end(),
                           [&](const std::string& h) { return detail::trim(h) == detail::trim(name); });
    if (it == header.end()) {
      throw Error(ErrorCode::MalformedHeader, "mapped column '" + name + "' not in header");
    }
    col[field] = static_cast<std::size_t>(it - header.begin());
  }

  ParseResult result;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && detail::trim(row[0]).empty()) continue;  // blank line
    const std::size_t data_row = r;
    auto cell = [&](Field f) -> std::string {
      const std::size_t c = col.at(f);
      return c < row.size() ? detail::trim(row[c]) : std::string{};
    };
    auto fail = [&](std::string reason) { result.errors.push_back({data_row, std::move(reason)}); };

    if (row.size() < header.size()) {
      fail("expected " + std::to_string(header.size()) + " fields, found " +
           std::to_string(row.size()));
      continue;
    }
    auto date = parse_date(cell(Field::Date), mapping.date_format);
    if (!date) {
      fail("unparseable date '" + cell(Field::Date) + "'");
      continue;
    }
    if (cell(Field::ActorA).empty()) {
      fail("missing actor_a");
      continue;
    }

    EventRecord rec;
    rec.id = cell(Field::Id);
    rec.date = *date;
    rec.event_type = parse_event_type(cell(Field::EventType));
    rec.country = detail::normalize_space(cell(Field::Country));

    const std::string fat = cell(Field::Fatalities);
    if (!fat.empty()) {
      try {
        std::size_t used = 0;
        rec.fatalities = std::stol(fat, &used);
        if (used != fat.size() || rec.fatalities < 0) throw std::invalid_argument(fat);
      } catch (const std::exception&) {
        fail("bad fatalities '" + fat + "'");
        continue;
      }
    }

    try {
      std::size_t ulat = 0, ulon = 0;
      const std::string slat = cell(Field::Latitude), slon = cell(Field::Longitude);
      const double lat = std::stod(slat, &ulat), lon = std::stod(slon, &ulon);
      if (ulat == slat.size() && ulon == slon.size() && GeoPoint::valid(lat, lon)) {
        rec.location = GeoPoint(lat, lon);
      }
    } catch (const std::exception&) {
    }

    const std::pair<Field, std::optional<std::string> EventRecord::*> slots[] = {
        {Field::ActorA, &EventRecord::actor_a},
        {Field::ActorB, &EventRecord::actor_b},
        {Field::ActorC, &EventRecord::actor_c},
        {Field::ActorD, &EventRecord::actor_d}};
    for (const auto& [field, member] : slots) {
      const std::string raw = cell(field);
      if (raw.empty()) continue;
      ActorRef ref = catalog.canonicalize(raw);
      result.actors.emplace(ref.id, ref.category);
      rec.*member = std::move(ref.id);
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

struct DateRange {
  Date first;
  Date last;  // inclusive
};

struct EventFilter {
  std::set<EventType> types{kAllEventTypes.begin(), kAllEventTypes.end()};
  std::optional<std::set<std::string>> actors;
  std::optional<DateRange> dates;
  std::optional<std::set<std::string>> countries;

  bool accepts(const EventRecord& e) const {
    if (!types.contains(e.event_type)) return false;
    if (actors) {
      const auto slots = e.actors();
      if (std::none_of(slots.begin(), slots.end(),
                       [&](const auto* a) { return a->has_value() && actors->contains(**a); })) {
        return false;
      }
    }
    if (dates && (e.date < dates->first || e.date > dates->last)) return false;
    if (countries && !countries->contains(e.country)) return false;
    return true;
  }
};

/// Keeps events accepted by `filter`, preserving input order. Actor ids in
/// the filter must already be canonical.
inline std::vector<EventRecord> filter_events(const std::vector<EventRecord>& events,
                                              const EventFilter& filter) {
  std::vector<EventRecord> out;
  std::copy_if(events.begin(), events.end(), std::back_inserter(out),
               [&](const EventRecord& e) { return filter.accepts(e); });
  return out;
}

// ---------------------------------------------------------------------------
// JSON form used by the events artifact

inline nlohmann::json to_json(const EventRecord& e) {
  auto opt = [](const std::optional<std::string>& s) -> nlohmann::json {
    return s ? nlohmann::json(*s) : nlohmann::json(nullptr);
  };
  nlohmann::json j = {{"id", e.id},
                      {"date", format_iso(e.date)},
                      {"event_type", std::string(to_label(e.event_type))},
                      {"country", e.country},
                      {"actor_a", opt(e.actor_a)},
                      {"actor_b", opt(e.actor_b)},
                      {"actor_c", opt(e.actor_c)},
                      {"actor_d", opt(e.actor_d)},
                      {"fatalities", e.fatalities}};
  j["latitude"] = e.location ? nlohmann::json(e.location->lat()) : nlohmann::json(nullptr);
  j["longitude"] = e.location ? nlohmann::json(e.location->lon()) : nlohmann::json(nullptr);
  return j;
}

inline EventRecord event_from_json(const nlohmann::json& j) {
  auto opt = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
  };
  EventRecord e;
  e.id = j.at("id").get<std::string>();
  auto date = parse_iso_date(j.at("date").get<std::string>());
  if (!date) throw Error(ErrorCode::SchemaMismatch, "bad date in event " + e.id);
  e.date = *date;
  e.event_type = parse_event_type(j.at("event_type").get<std::string>());
  e.country = j.at("country").get<std::string>();
  if (!j.at("latitude").is_null() && !j.at("longitude").is_null()) {
    e.location = GeoPoint(j.at("latitude").get<double>(), j.at("longitude").get<double>());
  }
  e.actor_a = opt("actor_a");
  e.actor_b = opt("actor_b");
  e.actor_c = opt("actor_c");
  e.actor_d = opt("actor_d");
  e.fatalities = j.at("fatalities").get<long>();
  return e;
}

}  // namespace cnl

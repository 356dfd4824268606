#pragma once

#include <doctest.h>

#include <memory>
#include <string>

#include "fedspace/common/error.hpp"
#include "fedspace/common/time.hpp"
#include "fedspace/store/entity_store.hpp"

// Checks that `expr` throws fedspace::Error with code `errc`.
#define CHECK_ERRC(expr, errc)                                              \
  do {                                                                      \
    bool thrown_ = false;                                                   \
    try {                                                                   \
      (void)(expr);                                                         \
    } catch (const ::fedspace::Error& e_) {                                 \
      thrown_ = true;                                                       \
      CHECK_MESSAGE(e_.code() == (errc), "got ", ::fedspace::to_string(e_.code())); \
    }                                                                       \
    CHECK_MESSAGE(thrown_, #expr " did not throw");                         \
  } while (0)

namespace unit {

inline fedspace::Timestamp at(const char* text) { return *fedspace::parse_timestamp(text); }

inline std::shared_ptr<fedspace::ManualClock> clock_at(const char* text = "2026-03-01T09:00:00.000Z") {
  return std::make_shared<fedspace::ManualClock>(at(text));
}

inline fedspace::store::EntityRecord domain_record(const std::string& name) {
  return {.urn = fedspace::store::Urn::domain(name), .kind = fedspace::store::EntityKind::Domain, .name = name};
}

inline fedspace::store::Urn dataset_urn(const std::string& name) {
  return fedspace::store::Urn::dataset("postgres", name, fedspace::store::Env::Prod);
}

inline fedspace::store::EntityRecord dataset_record(const std::string& name) {
  return {.urn = dataset_urn(name), .kind = fedspace::store::EntityKind::Dataset, .name = name};
}

inline fedspace::store::DatasetAspect aspect_for(const std::string& name, const std::string& domain,
                                                 const std::string& format = "text/csv") {
  return {.dataset_urn = dataset_urn(name),
          .domain_urn = fedspace::store::Urn::domain(domain),
          .access_endpoint = "https://data.example.org/" + name,
          .format_hint = format};
}

}  // namespace unit

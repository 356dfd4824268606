#pragma once

#include "fedspace/common/util.hpp"
#include "fedspace/store/entity.hpp"

namespace fedspace::store {

/// Read side of a metadata store as seen by a federating peer.
class CatalogSource {
 public:
  virtual ~CatalogSource() = default;

  virtual Page<EntityRecord> list_domains(PageRequest page) = 0;
  virtual Page<DatasetEntry> list_datasets_in_domain(const Urn& domain, PageRequest page) = 0;
  virtual DatasetDetail get_dataset_detail(const Urn& urn) = 0;
};

}  // namespace fedspace::store

#pragma once
// Binary embedding-store container plus a JSON label sidecar.
//
// <base>.bin, little endian:
//   u32 magic "DKGE" | u32 version | u32 model kind | u32 entity_dim
//   u32 relation_dim | u32 reserved | u64 entity_count | u64 relation_count
// followed by row-major 64-bit float blocks in ascending-id row order:
//   entity vectors, entity projections (TransD only),
//   relation primary blocks, hyperplane normals (TransH only),
//   relation projections (TransD only).
// <base>.labels.json maps labels to row indices:
//   {"model": ..., "entities": {label: row}, "relations": {label: row}}
// Round-trips are bit-exact.

#include <filesystem>

#include "dynakge/datasets.hpp"
#include "dynakge/store.hpp"

namespace dynakge {

void save_store(const EmbeddingStore& store, const Dictionary& entities,
                const Dictionary& relations, const std::filesystem::path& base);

// Reads kind and dimensions from the header; all other spec fields come from
// the model defaults. Labels unknown to the given dictionaries raise
// LookupError (mismatched dictionary).
EmbeddingStore load_store(const std::filesystem::path& base, const Dictionary& entities,
                          const Dictionary& relations);

// Model kind stored in a container header, without loading the payload.
ModelKind peek_store_kind(const std::filesystem::path& base);

}  // namespace dynakge

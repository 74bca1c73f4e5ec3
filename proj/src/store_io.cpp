#include "dynakge/store_io.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace dynakge {

using nlohmann::json;

namespace {

constexpr std::uint32_t kMagic = 0x45474b44;  // "DKGE"
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::uint64_t read_u64(std::ifstream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_row(std::ofstream& out, std::span<const double> row) {
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
}

void read_row(std::ifstream& in, std::span<double> row) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
}

std::filesystem::path bin_path(const std::filesystem::path& base) {
    std::filesystem::path p = base;
    p += ".bin";
    return p;
}

std::filesystem::path labels_path(const std::filesystem::path& base) {
    std::filesystem::path p = base;
    p += ".labels.json";
    return p;
}

}  // namespace

void save_store(const EmbeddingStore& store, const Dictionary& entities,
                const Dictionary& relations, const std::filesystem::path& base) {
    const ModelSpec& spec = store.spec();
    const std::vector<EntityId> entity_ids = store.entity_ids_sorted();
    const std::vector<RelationId> relation_ids = store.relation_ids_sorted();

    std::ofstream out(bin_path(base), std::ios::binary);
    if (!out) throw Error("cannot write " + bin_path(base).string());
    write_u32(out, kMagic);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(spec.kind));
    write_u32(out, static_cast<std::uint32_t>(spec.entity_dim));
    write_u32(out, static_cast<std::uint32_t>(spec.relation_dim));
    write_u32(out, 0);
    write_u64(out, entity_ids.size());
    write_u64(out, relation_ids.size());

    for (EntityId id : entity_ids) write_row(out, store.entity_vec(id));
    if (store.has_entity_proj())
        for (EntityId id : entity_ids) write_row(out, store.entity_proj(id));
    for (RelationId id : relation_ids) write_row(out, store.relation_vec(id));
    if (store.has_relation_normal())
        for (RelationId id : relation_ids) write_row(out, store.relation_normal(id));
    if (store.has_relation_proj())
        for (RelationId id : relation_ids) write_row(out, store.relation_proj(id));
    if (!out) throw Error("write failed: " + bin_path(base).string());

    json sidecar;
    sidecar["model"] = to_string(spec.kind);
    json entity_rows = json::object();
    for (std::size_t row = 0; row < entity_ids.size(); ++row)
        entity_rows[entities.label(entity_ids[row])] = row;
    json relation_rows = json::object();
    for (std::size_t row = 0; row < relation_ids.size(); ++row)
        relation_rows[relations.label(relation_ids[row])] = row;
    sidecar["entities"] = std::move(entity_rows);
    sidecar["relations"] = std::move(relation_rows);

    std::ofstream side(labels_path(base));
    if (!side) throw Error("cannot write " + labels_path(base).string());
    side << sidecar.dump(2) << '\n';
}

ModelKind peek_store_kind(const std::filesystem::path& base) {
    std::ifstream in(bin_path(base), std::ios::binary);
    if (!in) throw Error("cannot read " + bin_path(base).string());
    if (read_u32(in) != kMagic) throw Error("not an embedding store: " + bin_path(base).string());
    read_u32(in);
    return static_cast<ModelKind>(read_u32(in));
}

EmbeddingStore load_store(const std::filesystem::path& base, const Dictionary& entities,
                          const Dictionary& relations) {
    std::ifstream in(bin_path(base), std::ios::binary);
    if (!in) throw Error("cannot read " + bin_path(base).string());
    if (read_u32(in) != kMagic) throw Error("not an embedding store: " + bin_path(base).string());
    if (read_u32(in) != kVersion)
        throw Error("unsupported store version in " + bin_path(base).string());

    ModelSpec spec = ModelSpec::defaults(static_cast<ModelKind>(read_u32(in)));
    spec.entity_dim = static_cast<int>(read_u32(in));
    spec.relation_dim = static_cast<int>(read_u32(in));
    read_u32(in);  // reserved
    const std::uint64_t entity_count = read_u64(in);
    const std::uint64_t relation_count = read_u64(in);

    std::ifstream side(labels_path(base));
    if (!side) throw Error("cannot read " + labels_path(base).string());
    json sidecar = json::parse(side);

    auto rows_to_ids = [&](const json& mapping, const Dictionary& dict, std::uint64_t count,
                           const char* what) {
        if (mapping.size() != count)
            throw Error(std::string("label sidecar does not match store header for ") + what);
        std::vector<std::uint32_t> ids(count);
        for (auto it = mapping.begin(); it != mapping.end(); ++it) {
            const auto id = dict.find(it.key());
            if (!id)
                throw LookupError("store label '" + it.key() + "' unknown to the " + what +
                                  " dictionary");
            ids.at(it.value().get<std::size_t>()) = *id;
        }
        return ids;
    };
    const std::vector<std::uint32_t> entity_ids =
        rows_to_ids(sidecar.at("entities"), entities, entity_count, "entity");
    const std::vector<std::uint32_t> relation_ids =
        rows_to_ids(sidecar.at("relations"), relations, relation_count, "relation");

    EmbeddingStore store(spec);
    for (std::uint32_t id : entity_ids) store.add_entity(id);
    for (std::uint32_t id : relation_ids) store.add_relation(id);

    for (std::uint32_t id : entity_ids) read_row(in, store.entity_vec(id));
    if (store.has_entity_proj())
        for (std::uint32_t id : entity_ids) read_row(in, store.entity_proj(id));
    for (std::uint32_t id : relation_ids) read_row(in, store.relation_vec(id));
    if (store.has_relation_normal())
        for (std::uint32_t id : relation_ids) read_row(in, store.relation_normal(id));
    if (store.has_relation_proj())
        for (std::uint32_t id : relation_ids) read_row(in, store.relation_proj(id));
    if (!in) throw Error("truncated embedding store: " + bin_path(base).string());
    return store;
}

}  // namespace dynakge

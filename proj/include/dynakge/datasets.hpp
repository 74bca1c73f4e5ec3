#pragma once
// Dataset handling: tab-separated triple ingestion, the persistent
// train/valid/test split assignment, sliding-window and synthetic snapshot
// generation, and the on-disk snapshot directory layout
// (snapshots/<i>/{train,valid,test}.tsv plus meta.json).

#include <filesystem>
#include <optional>
#include <unordered_map>

#include "dynakge/rng.hpp"
#include "dynakge/types.hpp"

namespace dynakge {

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

// Label <-> dense index dictionary. One dictionary per element kind persists
// across all snapshots of a timeline, so re-added labels keep their index.
class Dictionary {
public:
    std::uint32_t add(const std::string& label);
    std::optional<std::uint32_t> find(const std::string& label) const;
    const std::string& label(std::uint32_t id) const;
    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, std::uint32_t> ids_;
};

struct TimedTriple {
    Triple triple;
    std::int64_t timestamp = 0;
};

struct TimedTripleLog {
    std::vector<TimedTriple> entries;  // sorted by timestamp, ties in file order
    Dictionary entities;
    Dictionary relations;
    std::size_t duplicates_dropped = 0;
};

// Parses "head<TAB>relation<TAB>tail[<TAB>timestamp]"; missing timestamps get
// line-order indices. Malformed lines raise ParseError naming the line;
// exact (triple, timestamp) duplicates are dropped and counted.
TimedTripleLog load_triples(const std::filesystem::path& path);

enum class Split { Train, Valid, Test };

struct SplitProportions {
    double train = 0.9;
    double valid = 0.05;
    double test = 0.05;

    void check() const;
};

// Persistent triple -> split map: a triple drawn once keeps its split for the
// rest of the timeline, so temporarily deleted triples return to the same set.
class SplitAssignment {
public:
    explicit SplitAssignment(SplitProportions proportions = {});

    Split assign(const Triple& t, Rng& rng);
    std::optional<Split> lookup(const Triple& t) const;
    const SplitProportions& proportions() const { return proportions_; }
    std::size_t size() const { return assigned_.size(); }

private:
    SplitProportions proportions_;
    std::unordered_map<Triple, Split, TripleHash> assigned_;
};

// Iteratively removes entities and relations occurring in fewer than
// min_count distinct triples (and the triples using them) until stable.
void min_degree_filter(TimedTripleLog& log, std::size_t min_count);

// Window size and start offsets: W = round(w*N), offset_i = round(i*(N-W)/(K-1)).
std::vector<std::size_t> sliding_window_offsets(std::size_t n, int num_snapshots,
                                                double window_fraction,
                                                std::size_t& window_size);

// K equal-sized windows sliding over the time-sorted log; snapshot vertex and
// relation sets are induced from the window's triples.
std::vector<Snapshot> sliding_window_snapshots(const TimedTripleLog& log, int num_snapshots,
                                               double window_fraction, SplitAssignment& splits,
                                               Rng& rng);

struct SyntheticParams {
    int snapshots = 20;
    double entity_keep = 0.995;
    double relation_keep = 0.995;
    double triple_keep = 0.95;
};

// Per snapshot: sample round(keep*|V|) entities and round(keep*|R|) relations
// uniformly, restrict triples to those fully inside the samples, keep a
// uniform round(triple_keep * induced) of them, and split with persistence.
// Sampled-but-isolated ids stay in the snapshot's vertex/relation sets.
std::vector<Snapshot> synthetic_snapshots(const std::vector<Triple>& base_triples,
                                          const std::vector<EntityId>& base_vertices,
                                          const std::vector<RelationId>& base_relations,
                                          const SyntheticParams& params, SplitAssignment& splits,
                                          Rng& rng);

struct SnapshotTimeline {
    std::vector<Snapshot> snapshots;
    Dictionary entities;
    Dictionary relations;
};

// Writes snapshots/<i>/{train,valid,test}.tsv plus meta.json. Vertices and
// relations without any triple in a snapshot are recorded in the meta file so
// the layout round-trips exactly.
void write_snapshots(const std::filesystem::path& dir, const SnapshotTimeline& timeline,
                     const std::string& generator, std::uint64_t seed,
                     const std::vector<std::size_t>& offsets = {});

SnapshotTimeline read_snapshots(const std::filesystem::path& dir);

}  // namespace dynakge

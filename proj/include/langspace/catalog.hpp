#ifndef LANGSPACE_CATALOG_HPP
#define LANGSPACE_CATALOG_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace langspace {

struct GeoPoint {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
};

/// One language: identity, geography, lineage path, phoneme inventory.
/// The lineage runs from the tree root to the language's own leaf, and its
/// last element equals the id.
struct Language {
  std::string id;
  std::string name;
  std::optional<GeoPoint> location;
  std::vector<std::string> lineage;
  std::set<std::string> phonemes;
};

/// Non-fatal findings from loading (e.g. languages without inventories).
struct LoadReport {
  std::vector<std::string> warnings;
};

/// Immutable, validated collection of languages plus the deduplicated,
/// lexicographically ordered union of all phoneme tokens.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<Language> languages);

  std::size_t size() const { return languages_.size(); }
  const std::vector<Language>& languages() const { return languages_; }
  const std::vector<std::string>& phoneme_universe() const {
    return phoneme_universe_;
  }

  bool contains(const std::string& id) const {
    return index_.find(id) != index_.end();
  }
  /// Throws ValidationError for unknown ids.
  const Language& at(const std::string& id) const;
  std::size_t index_of(const std::string& id) const;

 private:
  void validate() const;
  std::vector<Language> languages_;  // sorted by id
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> phoneme_universe_;
};

/// Load and validate a catalog from a languages file (JSON array of
/// {"id","name","lat","lon","lineage"}) and an optional inventories file
/// (JSON object id -> [phoneme, ...]). Missing inventories are warnings in
/// the report, not failures.
Catalog load_catalog(const std::string& languages_file,
                     const std::string& inventories_file,
                     LoadReport* report = nullptr);
Catalog load_catalog(const std::string& languages_file,
                     LoadReport* report = nullptr);

/// Canonical single-file serialization: keys sorted, languages sorted by id,
/// inventories sorted; loading it back yields a bit-equal canonical form.
std::string save_catalog(const Catalog& catalog);
void save_catalog(const Catalog& catalog, const std::string& path);
Catalog load_catalog_canonical(const std::string& path);

/// Single language record from a JSON file: the catalog record schema plus an
/// optional inline "phonemes" array. Used for zero-shot targets that are not
/// part of any catalog; validated like a catalog member.
Language load_language(const std::string& path);

/// Binary membership vector over catalog.phoneme_universe() for one language.
std::vector<std::uint8_t> phoneme_vector(const Catalog& catalog,
                                         const std::string& id);

}  // namespace langspace

#endif  // LANGSPACE_CATALOG_HPP

#ifndef LANGSPACE_TESTS_HELPERS_HPP
#define LANGSPACE_TESTS_HELPERS_HPP

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "langspace/catalog.hpp"

namespace testutil {

inline std::string data_dir() { return LANGSPACE_DATA_DIR; }

inline std::string fixture_languages() {
  return data_dir() + "/fixture_languages.json";
}

inline std::string fixture_inventories() {
  return data_dir() + "/fixture_inventories.json";
}

inline langspace::Catalog load_fixture(langspace::LoadReport* report = nullptr) {
  return langspace::load_catalog(fixture_languages(), fixture_inventories(),
                                 report);
}

/// Language builder; the leaf id is appended to the lineage automatically.
inline langspace::Language make_language(
    const std::string& id, double lat, double lon,
    std::vector<std::string> lineage_above,
    std::set<std::string> phonemes = {"p", "t", "k", "a", "i"}) {
  langspace::Language lang;
  lang.id = id;
  lang.name = id;
  lang.location = langspace::GeoPoint{lat, lon};
  lang.lineage = std::move(lineage_above);
  lang.lineage.push_back(id);
  lang.phonemes = std::move(phonemes);
  return lang;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 10000; ++attempt) {
      auto candidate =
          base / ("langspace_test_" + std::to_string(next_id()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create a scratch directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  static int next_id() {
    static int counter = 0;
    return counter++ + static_cast<int>(::getpid() % 100000) * 10000;
  }
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace testutil

#endif  // LANGSPACE_TESTS_HELPERS_HPP

#include "langspace/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "langspace/errors.hpp"

namespace langspace {

using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string record_ctx(const std::string& file, std::size_t i) {
  std::ostringstream os;
  os << file << ", record " << i << ": ";
  return os.str();
}

Language parse_language(const json& obj, const std::string& ctx) {
  if (!obj.is_object()) throw ParseError(ctx + "expected an object");
  Language lang;
  if (!obj.contains("id") || !obj["id"].is_string())
    throw ParseError(ctx + "missing string field 'id'");
  lang.id = obj["id"].get<std::string>();
  if (lang.id.empty()) throw ValidationError(ctx + "empty id");
  if (obj.contains("name") && obj["name"].is_string())
    lang.name = obj["name"].get<std::string>();

  const bool has_lat = obj.contains("lat") && !obj["lat"].is_null();
  const bool has_lon = obj.contains("lon") && !obj["lon"].is_null();
  if (has_lat != has_lon)
    throw ValidationError(ctx + "language '" + lang.id +
                          "' has only one of lat/lon");
  if (has_lat) {
    if (!obj["lat"].is_number() || !obj["lon"].is_number())
      throw ParseError(ctx + "lat/lon must be numbers or null");
    lang.location = GeoPoint{obj["lat"].get<double>(), obj["lon"].get<double>()};
  }

  if (!obj.contains("lineage") || !obj["lineage"].is_array())
    throw ParseError(ctx + "missing array field 'lineage'");
  for (const auto& node : obj["lineage"]) {
    if (!node.is_string())
      throw ParseError(ctx + "lineage entries must be strings");
    lang.lineage.push_back(node.get<std::string>());
  }
  return lang;
}

void check_language(const Language& lang) {
  if (lang.lineage.empty())
    throw ValidationError("language '" + lang.id + "' has an empty lineage");
  if (lang.lineage.back() != lang.id)
    throw ValidationError("language '" + lang.id +
                          "' lineage does not end in its id (found '" +
                          lang.lineage.back() + "')");
  if (lang.location) {
    if (lang.location->latitude_deg < -90.0 ||
        lang.location->latitude_deg > 90.0)
      throw ValidationError("language '" + lang.id +
                            "' latitude out of [-90, 90]");
    if (lang.location->longitude_deg < -180.0 ||
        lang.location->longitude_deg > 180.0)
      throw ValidationError("language '" + lang.id +
                            "' longitude out of [-180, 180]");
  }
}

}  // namespace

Catalog::Catalog(std::vector<Language> languages)
    : languages_(std::move(languages)) {
  std::sort(languages_.begin(), languages_.end(),
            [](const Language& a, const Language& b) { return a.id < b.id; });
  validate();
  for (std::size_t i = 0; i < languages_.size(); ++i)
    index_[languages_[i].id] = i;
  std::set<std::string> universe;
  for (const auto& lang : languages_)
    universe.insert(lang.phonemes.begin(), lang.phonemes.end());
  phoneme_universe_.assign(universe.begin(), universe.end());
}

void Catalog::validate() const {
  for (std::size_t i = 0; i + 1 < languages_.size(); ++i)
    if (languages_[i].id == languages_[i + 1].id)
      throw ValidationError("duplicate language id '" + languages_[i].id + "'");

  std::map<std::string, std::string> parent;  // node -> parent ("" = root)
  for (const auto& lang : languages_) {
    check_language(lang);
    std::string prev = "";
    for (const auto& node : lang.lineage) {
      auto it = parent.find(node);
      if (it == parent.end()) {
        parent.emplace(node, prev);
      } else if (it->second != prev) {
        auto show = [](const std::string& s) {
          return s.empty() ? std::string("<root>") : s;
        };
        throw ValidationError("lineage node '" + node +
                              "' appears with two parents: '" +
                              show(it->second) + "' and '" + show(prev) + "'");
      }
      prev = node;
    }
  }
}

const Language& Catalog::at(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw ValidationError("unknown language id '" + id + "'");
  return languages_[it->second];
}

std::size_t Catalog::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw ValidationError("unknown language id '" + id + "'");
  return it->second;
}

Catalog load_catalog(const std::string& languages_file,
                     const std::string& inventories_file, LoadReport* report) {
  json jl = read_json_file(languages_file);
  if (!jl.is_array())
    throw ParseError(languages_file + ": expected a JSON array of languages");

  std::vector<Language> langs;
  for (std::size_t i = 0; i < jl.size(); ++i)
    langs.push_back(parse_language(jl[i], record_ctx(languages_file, i)));

  LoadReport local;
  LoadReport* rep = report ? report : &local;

  if (!inventories_file.empty()) {
    json ji = read_json_file(inventories_file);
    if (!ji.is_object())
      throw ParseError(inventories_file +
                       ": expected a JSON object id -> [phonemes]");
    std::map<std::string, std::set<std::string>> inv;
    for (auto it = ji.begin(); it != ji.end(); ++it) {
      if (!it.value().is_array())
        throw ParseError(inventories_file + ": inventory of '" + it.key() +
                         "' must be an array");
      std::set<std::string> tokens;
      for (const auto& tok : it.value()) {
        if (!tok.is_string())
          throw ParseError(inventories_file + ": phoneme tokens of '" +
                           it.key() + "' must be strings");
        tokens.insert(tok.get<std::string>());
      }
      inv.emplace(it.key(), std::move(tokens));
    }
    std::set<std::string> known;
    for (auto& lang : langs) {
      known.insert(lang.id);
      auto it = inv.find(lang.id);
      if (it == inv.end()) {
        rep->warnings.push_back("language '" + lang.id +
                                "' has no phoneme inventory");
      } else {
        lang.phonemes = it->second;
      }
    }
    for (const auto& [id, tokens] : inv)
      if (!known.count(id))
        rep->warnings.push_back("inventory for unknown language id '" + id +
                                "' ignored");
  } else {
    for (const auto& lang : langs)
      rep->warnings.push_back("language '" + lang.id +
                              "' has no phoneme inventory");
  }

  return Catalog(std::move(langs));
}

Catalog load_catalog(const std::string& languages_file, LoadReport* report) {
  return load_catalog(languages_file, "", report);
}

std::string save_catalog(const Catalog& catalog) {
  json jlangs = json::array();
  for (const auto& lang : catalog.languages()) {
    json jl;
    jl["id"] = lang.id;
    jl["name"] = lang.name;
    if (lang.location) {
      jl["lat"] = lang.location->latitude_deg;
      jl["lon"] = lang.location->longitude_deg;
    } else {
      jl["lat"] = nullptr;
      jl["lon"] = nullptr;
    }
    jl["lineage"] = lang.lineage;
    jl["phonemes"] = json::array();
    for (const auto& p : lang.phonemes) jl["phonemes"].push_back(p);
    jlangs.push_back(std::move(jl));
  }
  json root;
  root["languages"] = std::move(jlangs);
  root["phoneme_universe"] = catalog.phoneme_universe();
  return root.dump(2) + "\n";
}

void save_catalog(const Catalog& catalog, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InternalError("cannot write '" + path + "'");
  out << save_catalog(catalog);
}

Catalog load_catalog_canonical(const std::string& path) {
  json root = read_json_file(path);
  if (!root.is_object() || !root.contains("languages") ||
      !root["languages"].is_array())
    throw ParseError(path + ": expected a canonical catalog object");
  std::vector<Language> langs;
  const auto& jl = root["languages"];
  for (std::size_t i = 0; i < jl.size(); ++i) {
    Language lang = parse_language(jl[i], record_ctx(path, i));
    if (jl[i].contains("phonemes")) {
      for (const auto& tok : jl[i]["phonemes"]) {
        if (!tok.is_string())
          throw ParseError(record_ctx(path, i) + "phonemes must be strings");
        lang.phonemes.insert(tok.get<std::string>());
      }
    }
    langs.push_back(std::move(lang));
  }
  return Catalog(std::move(langs));
}

Language load_language(const std::string& path) {
  json obj = read_json_file(path);
  Language lang = parse_language(obj, path + ": ");
  if (obj.contains("phonemes")) {
    if (!obj["phonemes"].is_array())
      throw ParseError(path + ": phonemes must be an array");
    for (const auto& tok : obj["phonemes"]) {
      if (!tok.is_string())
        throw ParseError(path + ": phoneme tokens must be strings");
      lang.phonemes.insert(tok.get<std::string>());
    }
  }
  check_language(lang);
  return lang;
}

std::vector<std::uint8_t> phoneme_vector(const Catalog& catalog,
                                         const std::string& id) {
  const Language& lang = catalog.at(id);
  const auto& universe = catalog.phoneme_universe();
  std::vector<std::uint8_t> v(universe.size(), 0);
  for (std::size_t i = 0; i < universe.size(); ++i)
    v[i] = lang.phonemes.count(universe[i]) ? 1 : 0;
  return v;
}

}  // namespace langspace

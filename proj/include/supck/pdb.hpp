#pragma once

// Fixed-column structure-file reader and binding-pocket / ligand extraction.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "supck/geometry.hpp"

namespace supck {

struct HetKey {
  std::string code;
  std::string chain;
  int res_seq = 0;

  auto operator<=>(const HetKey&) const = default;

  std::string to_string() const { return code + ":" + chain + ":" + std::to_string(res_seq); }
};

struct Structure {
  std::vector<Atom> protein_atoms;
  std::map<HetKey, std::vector<Atom>> het_groups;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string_view column(std::string_view line, std::size_t first, std::size_t width) {
  // first is 1-based, as in the format description
  if (line.size() < first) return {};
  return line.substr(first - 1, width);
}

inline double parse_real(std::string_view field, std::size_t line_no, const char* what) {
  const std::string_view f = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
    throw ParseError(line_no, std::string("malformed ") + what + " field '" + std::string(field) + "'");
  return v;
}

inline int parse_int(std::string_view field, std::size_t line_no, const char* what) {
  const std::string_view f = trim(field);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || ec != std::errc() || ptr != f.data() + f.size())
    throw ParseError(line_no, std::string("malformed ") + what + " field '" + std::string(field) + "'");
  return v;
}

inline std::string infer_element(std::string_view atom_name) {
  const std::string_view n = trim(atom_name);
  for (char c : n)
    if (std::isalpha(static_cast<unsigned char>(c))) return std::string(1, c);
  return {};
}

inline bool is_hydrogen(std::string_view element) { return element == "H" || element == "D"; }

}  // namespace detail

/// Reads ATOM/HETATM records of the first model. Hydrogens and alternate
/// locations other than blank or 'A' are dropped.
inline Structure parse_structure(std::istream& in) {
  Structure s;
  std::string raw;
  std::size_t line_no = 0;
  bool seen_model = false;
  std::size_t atom_count = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line(raw);
    const std::string_view record = detail::trim(detail::column(line, 1, 6));
    if (record == "MODEL") {
      if (seen_model) break;
      seen_model = true;
      continue;
    }
    if (record == "ENDMDL") break;
    const bool is_atom = record == "ATOM";
    if (!is_atom && record != "HETATM") continue;
    if (line.size() < 54) throw ParseError(line_no, "coordinate record shorter than 54 columns");

    const char alt = line.size() >= 17 ? line[16] : ' ';
    if (alt != ' ' && alt != 'A') continue;

    Atom atom;
    atom.meta.atom_name = std::string(detail::trim(detail::column(line, 13, 4)));
    atom.meta.res_name = std::string(detail::trim(detail::column(line, 18, 3)));
    atom.meta.chain = std::string(detail::trim(detail::column(line, 22, 1)));
    atom.meta.res_seq = detail::parse_int(detail::column(line, 23, 4), line_no, "residue number");
    atom.position = Vec3(detail::parse_real(detail::column(line, 31, 8), line_no, "x"),
                         detail::parse_real(detail::column(line, 39, 8), line_no, "y"),
                         detail::parse_real(detail::column(line, 47, 8), line_no, "z"));
    std::string element(detail::trim(detail::column(line, 77, 2)));
    if (element.empty()) element = detail::infer_element(atom.meta.atom_name);
    std::transform(element.begin(), element.end(), element.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (detail::is_hydrogen(element)) continue;
    atom.element = std::move(element);

    ++atom_count;
    if (is_atom) {
      s.protein_atoms.push_back(std::move(atom));
    } else {
      HetKey key{atom.meta.res_name, atom.meta.chain, atom.meta.res_seq};
      s.het_groups[key].push_back(std::move(atom));
    }
  }
  if (atom_count == 0) throw InputError("structure contains no ATOM/HETATM records");
  return s;
}

inline Structure parse_structure(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_structure(in);
}

inline Structure load_structure(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open structure file '" + path + "'");
  try {
    return parse_structure(in);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

/// Partial charges keyed by (residue name, atom name). A residue name of "*"
/// matches any residue.
class ChargeTable {
 public:
  void set(const std::string& res_name, const std::string& atom_name, double charge) {
    table_[{res_name, atom_name}] = charge;
  }

  std::optional<double> find(const std::string& res_name, const std::string& atom_name) const {
    if (auto it = table_.find({res_name, atom_name}); it != table_.end()) return it->second;
    if (auto it = table_.find({"*", atom_name}); it != table_.end()) return it->second;
    return std::nullopt;
  }

  std::size_t size() const noexcept { return table_.size(); }
  bool empty() const noexcept { return table_.empty(); }

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
};

/// CSV with header `res_name,atom_name,charge`.
inline ChargeTable parse_charge_table(std::istream& in) {
  ChargeTable t;
  std::string raw;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(detail::trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!header) {
      if (fields.size() != 3 || fields[0] != "res_name" || fields[1] != "atom_name" || fields[2] != "charge")
        throw ParseError(line_no, "charge table header must be 'res_name,atom_name,charge'");
      header = true;
      continue;
    }
    if (fields.size() != 3) throw ParseError(line_no, "expected 3 fields");
    t.set(std::string(fields[0]), std::string(fields[1]), detail::parse_real(fields[2], line_no, "charge"));
  }
  if (!header) throw InputError("charge table is empty");
  return t;
}

inline ChargeTable load_charge_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open charge table '" + path + "'");
  return parse_charge_table(in);
}

enum class MissingChargePolicy { Zero, Skip, Error };

inline MissingChargePolicy parse_missing_charge_policy(std::string_view s) {
  if (s == "zero") return MissingChargePolicy::Zero;
  if (s == "skip") return MissingChargePolicy::Skip;
  if (s == "error") return MissingChargePolicy::Error;
  throw ParameterError("unknown missing-charge policy '" + std::string(s) + "'");
}

struct ExtractionConfig {
  double cutoff_radius = 5.3;  // Angstrom, strict "<"
  std::string ligand_code;     // CODE, CODE:CHAIN or CODE:CHAIN:RESSEQ
  ChargeTable charges;
  MissingChargePolicy missing_charge_policy = MissingChargePolicy::Zero;
  bool include_other_het = false;  // non-water het groups other than the ligand
};

/// Finds the single het group matching `code` (optionally `CODE:CHAIN[:RESSEQ]`).
inline HetKey resolve_het_group(const Structure& s, const std::string& code) {
  std::vector<std::string> parts;
  std::stringstream ss(code);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.empty() || parts.size() > 3 || parts[0].empty())
    throw InputError("malformed ligand code '" + code + "'");

  std::vector<HetKey> matches;
  for (const auto& [key, atoms] : s.het_groups) {
    if (key.code != parts[0]) continue;
    if (parts.size() >= 2 && key.chain != parts[1]) continue;
    if (parts.size() == 3 && std::to_string(key.res_seq) != parts[2]) continue;
    matches.push_back(key);
  }
  if (matches.empty()) {
    std::set<std::string> available;
    for (const auto& [key, atoms] : s.het_groups) available.insert(key.code);
    std::string list;
    for (const auto& a : available) list += (list.empty() ? "" : ", ") + a;
    throw InputError("ligand '" + code + "' not found; available het codes: " + (list.empty() ? "none" : list));
  }
  if (matches.size() > 1) {
    std::string list;
    for (const auto& m : matches) list += (list.empty() ? "" : ", ") + m.to_string();
    throw InputError("ligand '" + code + "' is ambiguous (" + list +
                     "); disambiguate with CODE:CHAIN or CODE:CHAIN:RESSEQ");
  }
  return matches.front();
}

/// Protein atoms with distance < cutoff to at least one ligand atom, labeled
/// with partial charges.
inline AtomCloud extract_pocket(const Structure& s, const ExtractionConfig& cfg, std::string id = {}) {
  if (!(cfg.cutoff_radius > 0.0)) throw ParameterError("cutoff_radius must be positive");
  const HetKey ligand_key = resolve_het_group(s, cfg.ligand_code);
  const std::vector<Atom>& ligand = s.het_groups.at(ligand_key);

  std::vector<const Atom*> candidates;
  for (const Atom& a : s.protein_atoms) candidates.push_back(&a);
  if (cfg.include_other_het) {
    for (const auto& [key, atoms] : s.het_groups) {
      if (key == ligand_key || key.code == "HOH" || key.code == "WAT" || key.code == "DOD") continue;
      for (const Atom& a : atoms) candidates.push_back(&a);
    }
  }

  const double r2 = cfg.cutoff_radius * cfg.cutoff_radius;
  std::vector<Atom> pocket;
  std::set<std::pair<std::string, std::string>> missing;
  for (const Atom* a : candidates) {
    const bool near = std::any_of(ligand.begin(), ligand.end(),
                                  [&](const Atom& l) { return (l.position - a->position).squaredNorm() < r2; });
    if (!near) continue;
    Atom out = *a;
    if (auto q = cfg.charges.find(a->meta.res_name, a->meta.atom_name)) {
      out.label = *q;
    } else {
      if (cfg.missing_charge_policy == MissingChargePolicy::Skip) continue;
      if (cfg.missing_charge_policy == MissingChargePolicy::Error) missing.insert({a->meta.res_name, a->meta.atom_name});
      out.label = 0.0;
    }
    pocket.push_back(std::move(out));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& [res, name] : missing) list += (list.empty() ? "" : ", ") + res + "/" + name;
    throw InputError("no partial charge for (residue/atom): " + list);
  }
  if (pocket.empty())
    throw InputError("empty pocket: no atom within " + std::to_string(cfg.cutoff_radius) + " A of ligand " +
                     ligand_key.to_string());
  return AtomCloud(std::move(pocket), std::move(id), ligand_key.code);
}

/// Atoms of the ligand het group; labels are zero.
inline AtomCloud extract_ligand(const Structure& s, const std::string& code, std::string id = {}) {
  const HetKey key = resolve_het_group(s, code);
  std::vector<Atom> atoms = s.het_groups.at(key);
  for (Atom& a : atoms) a.label = 0.0;
  return AtomCloud(std::move(atoms), std::move(id), key.code);
}

}  // namespace supck

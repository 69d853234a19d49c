#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pa/adversary.hpp"
#include "pa/binning.hpp"
#include "pa/finite_scheme.hpp"
#include "pa/info_theory.hpp"

namespace pa {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON adapters. A field element is always serialized as its ascending
// coefficient list (length L), so files are readable regardless of the packed
// in-memory representation.
// ---------------------------------------------------------------------------

inline ordered_json elem_to_json(const FieldCtx& ctx, FieldElem e) {
  return ordered_json(ctx.coeffs(e));
}

inline FieldElem elem_from_json(const FieldCtx& ctx, const ordered_json& j) {
  const auto coeffs = j.get<std::vector<uint64_t>>();
  return ctx.from_coeffs(coeffs);
}

inline ordered_json field_to_json(const FieldCtx& ctx) {
  ordered_json j;
  j["q"] = ctx.characteristic();
  j["L"] = ctx.ext_degree();
  if (ctx.ext_degree() > 1) j["reduction"] = ctx.reduction();
  return j;
}

inline FieldCtx field_from_json(const ordered_json& j) {
  const auto ctx = FieldCtx::make(j.at("q").get<uint64_t>(), j.at("L").get<uint32_t>());
  if (j.contains("reduction") && j.at("reduction").get<std::vector<uint64_t>>() != ctx.reduction()) {
    throw ConfigInvalid("reduction polynomial in file does not match the canonical one for GF(" +
                        std::to_string(ctx.characteristic()) + "^" +
                        std::to_string(ctx.ext_degree()) + ")");
  }
  return ctx;
}

/// A polynomial is a JSON array of serialized coefficients, ascending degree.
inline ordered_json poly_to_json(const FieldCtx& ctx, const Poly& p) {
  ordered_json j = ordered_json::array();
  for (const FieldElem c : p.coefficients()) j.push_back(elem_to_json(ctx, c));
  return j;
}

inline Poly poly_from_json(const FieldCtx& ctx, const ordered_json& j) {
  try {
    std::vector<FieldElem> coeffs;
    coeffs.reserve(j.size());
    for (const auto& c : j) coeffs.push_back(elem_from_json(ctx, c));
    return Poly(std::move(coeffs));
  } catch (const ordered_json::exception& e) {
    throw ConfigInvalid(std::string("bad polynomial: ") + e.what());
  }
}

inline ordered_json key_point_to_json(const FieldCtx& ctx, const KeyPoint& kp) {
  ordered_json j;
  j["x"] = elem_to_json(ctx, kp.x);
  j["y"] = elem_to_json(ctx, kp.y);
  return j;
}

inline KeyPoint key_point_from_json(const FieldCtx& ctx, const ordered_json& j) {
  return KeyPoint{elem_from_json(ctx, j.at("x")), elem_from_json(ctx, j.at("y"))};
}

inline ordered_json verifier_state_to_json(const CaOutput& ca) {
  ordered_json j;
  j["field"] = field_to_json(ca.ctx);
  j["K"] = ca.K;
  j["a0"] = elem_to_json(ca.ctx, ca.a0);
  ordered_json pts = ordered_json::array();
  for (const auto& kp : ca.keys) pts.push_back(key_point_to_json(ca.ctx, kp));
  j["key_points"] = pts;
  return j;
}

inline CaOutput verifier_state_from_json(const ordered_json& j) {
  try {
    const FieldCtx ctx = field_from_json(j.at("field"));
    CaOutput ca{ctx, j.at("K").get<uint32_t>(), elem_from_json(ctx, j.at("a0")), {}};
    for (const auto& p : j.at("key_points")) ca.keys.push_back(key_point_from_json(ctx, p));
    return ca;
  } catch (const ordered_json::exception& e) {
    throw MalformedV(std::string("bad verifier state file: ") + e.what());
  }
}

inline ordered_json user_key_to_json(const UserKey& k) {
  ordered_json j;
  j["field"] = field_to_json(k.ctx);
  j["K"] = k.K;
  j["k_index"] = k.k_index;
  j["key"] = key_point_to_json(k.ctx, k.key);
  return j;
}

inline UserKey user_key_from_json(const ordered_json& j) {
  try {
    const FieldCtx ctx = field_from_json(j.at("field"));
    return UserKey{ctx, j.at("K").get<uint32_t>(), j.at("k_index").get<uint32_t>(),
                   key_point_from_json(ctx, j.at("key"))};
  } catch (const ordered_json::exception& e) {
    throw ConfigInvalid(std::string("bad user key file: ") + e.what());
  }
}

inline ordered_json challenge_to_json(const FieldCtx& ctx, const Challenge& ch) {
  ordered_json j;
  j["session_id"] = ch.session_id;
  ordered_json pts = ordered_json::array();
  for (const auto& p : ch.points) {
    ordered_json pj;
    pj["x"] = elem_to_json(ctx, p.x);
    pj["y"] = elem_to_json(ctx, p.y);
    pts.push_back(pj);
  }
  j["points"] = pts;
  return j;
}

inline Challenge challenge_from_json(const FieldCtx& ctx, const ordered_json& j) {
  try {
    Challenge ch;
    ch.session_id = j.at("session_id").get<uint64_t>();
    for (const auto& p : j.at("points")) {
      ch.points.push_back({elem_from_json(ctx, p.at("x")), elem_from_json(ctx, p.at("y"))});
    }
    return ch;
  } catch (const ordered_json::exception& e) {
    throw ConfigInvalid(std::string("bad challenge file: ") + e.what());
  }
}

inline ordered_json response_to_json(const FieldCtx& ctx, const Response& r) {
  ordered_json j;
  j["session_id"] = r.session_id;
  j["s_hat"] = elem_to_json(ctx, r.s_hat);
  return j;
}

inline Response response_from_json(const FieldCtx& ctx, const ordered_json& j) {
  try {
    return Response{j.at("session_id").get<uint64_t>(), elem_from_json(ctx, j.at("s_hat"))};
  } catch (const ordered_json::exception& e) {
    throw ConfigInvalid(std::string("bad response file: ") + e.what());
  }
}

inline ordered_json source_to_json(const JointSource& src) {
  ordered_json j;
  j["px"] = src.px.p;
  j["pu_given_x"] = src.pu_given_x;
  j["py_given_x"] = src.py_given_x;
  return j;
}

/// Reads a (X, U, Y) source description: either the explicit triple
/// {px, pu_given_x, py_given_x} or the shorthand
/// {bsc: {p_x1, epsilon}, u_equals_x: true} for a Bernoulli(p_x1) input
/// observed through a BSC(epsilon), hinted with U = X.
inline JointSource source_from_json(const ordered_json& j) {
  try {
    if (j.contains("bsc")) {
      if (j.contains("u_equals_x") && !j.at("u_equals_x").get<bool>()) {
        throw ConfigInvalid("the bsc source shorthand only describes U = X");
      }
      return make_bsc_source(j.at("bsc").at("p_x1").get<double>(),
                             j.at("bsc").at("epsilon").get<double>());
    }
    JointSource src;
    src.px = Dist{j.at("px").get<std::vector<double>>()};
    src.pu_given_x = j.at("pu_given_x").get<std::vector<std::vector<double>>>();
    src.py_given_x = j.at("py_given_x").get<std::vector<std::vector<double>>>();
    src.validate();
    return src;
  } catch (const ordered_json::exception& e) {
    throw ConfigInvalid(std::string("bad source description: ") + e.what());
  }
}

/// A batch binning experiment description: one source evaluated at several
/// block lengths under a shared typicality margin, trial budget, and
/// attacker choice ("uniform" blind bin guessing or the trained
/// "empirical_map").
struct ExperimentConfig {
  JointSource joint;
  std::vector<uint32_t> n_values;
  uint32_t K = 2;
  double xi = 0.2;
  double xi_prime = 0.1;
  uint64_t trials = 1000;
  uint64_t master_seed = 1;
  std::string attacker = "uniform";
};

inline ordered_json experiment_config_to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["joint"] = source_to_json(cfg.joint);
  j["n_values"] = cfg.n_values;
  j["K"] = cfg.K;
  j["xi"] = cfg.xi;
  j["xi_prime"] = cfg.xi_prime;
  j["trials"] = cfg.trials;
  j["master_seed"] = cfg.master_seed;
  j["attacker"] = cfg.attacker;
  return j;
}

inline ExperimentConfig experiment_config_from_json(const ordered_json& j) {
  try {
    ExperimentConfig cfg;
    cfg.joint = source_from_json(j.at("joint"));
    cfg.n_values = j.at("n_values").get<std::vector<uint32_t>>();
    if (cfg.n_values.empty()) throw ConfigInvalid("n_values must be nonempty");
    if (j.contains("K")) cfg.K = j.at("K").get<uint32_t>();
    if (j.contains("xi")) cfg.xi = j.at("xi").get<double>();
    if (j.contains("xi_prime")) cfg.xi_prime = j.at("xi_prime").get<double>();
    if (j.contains("trials")) cfg.trials = j.at("trials").get<uint64_t>();
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<uint64_t>();
    if (j.contains("attacker")) cfg.attacker = j.at("attacker").get<std::string>();
    if (cfg.attacker != "uniform" && cfg.attacker != "empirical_map") {
      throw ConfigInvalid("experiment attacker must be \"uniform\" or \"empirical_map\"");
    }
    return cfg;
  } catch (const ordered_json::exception& e) {
    throw ConfigInvalid(std::string("bad experiment config: ") + e.what());
  }
}

/// Persistent state of a finite-regime attack strategy between sessions
/// (what a replay collector has gathered so far).
inline ordered_json attack_state_to_json(const AttackStrategy& s) {
  ordered_json j;
  j["kind"] = attack_name(s.kind);
  ordered_json pts = ordered_json::array();
  for (const auto& [x, y] : s.collected) pts.push_back(ordered_json::array({x, y}));
  j["collected"] = pts;
  return j;
}

inline AttackStrategy attack_state_from_json(const ordered_json& j) {
  try {
    AttackStrategy s{attack_from_name(j.at("kind").get<std::string>())};
    if (j.contains("collected")) {
      for (const auto& pt : j.at("collected")) {
        s.collected.emplace(pt.at(0).get<uint64_t>(), pt.at(1).get<uint64_t>());
      }
    }
    return s;
  } catch (const ordered_json::exception& e) {
    throw ConfigInvalid(std::string("bad attack state file: ") + e.what());
  }
}

inline ordered_json rational_to_json(const AuditRational& r) {
  ordered_json j;
  j["num"] = r.num;
  j["den"] = r.den;
  return j;
}

inline ordered_json audit_quantity_to_json(const AuditQuantity& q) {
  ordered_json j;
  j["num"] = q.value.num;
  j["den"] = q.value.den;
  j["bits"] = q.bits;
  j["proven_exact"] = q.proven_exact;
  return j;
}

inline ordered_json audit_to_json(const FiniteAuditReport& rep) {
  ordered_json j;
  j["q"] = rep.q;
  j["L"] = rep.L;
  j["K"] = rep.K;
  j["total_configs"] = rep.total_configs;
  j["i_s_m"] = audit_quantity_to_json(rep.i_s_m);
  j["h_ci_given_m_ck"] = audit_quantity_to_json(rep.h_ci_given_m_ck);
  j["h_ci_given_ck"] = audit_quantity_to_json(rep.h_ci_given_ck);
  ordered_json att;
  att["all_deterministic_uniform"] = rep.uniform_attack_success;
  att["best_deterministic"] = rational_to_json(rep.best_attack_success);
  att["worst_deterministic"] = rational_to_json(rep.worst_attack_success);
  j["attack"] = att;
  j["lemma1_bound"] = rep.lemma1_bound;
  return j;
}

inline ordered_json finite_rate_to_json(const FiniteRate& r) {
  ordered_json j;
  j["rate"] = r.rate;
  j["upper_bound"] = r.upper_bound;
  j["gap"] = r.gap;
  return j;
}

inline ordered_json binning_rates_to_json(const BinningRates& r) {
  ordered_json j;
  j["r_tilde"] = r.r_tilde;
  j["r_prime"] = r.r_prime;
  j["secret_rate"] = r.secret_rate;
  return j;
}

inline ordered_json asymptotic_rate_to_json(const AsymptoticRate& r) {
  ordered_json j;
  j["achieved"] = r.achieved;
  j["capacity"] = r.capacity;
  j["gap"] = r.gap;
  return j;
}

// ---------------------------------------------------------------------------
// Binary file formats. Both are little-endian with a 4-byte magic; the
// codebook format stores symbols bit-packed (LSB-first within each byte,
// rows byte-aligned) and keeps the source distribution in a JSON sidecar
// next to the binary file.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_bytes(std::string& out, uint64_t v, int nbytes) {
  for (int i = 0; i < nbytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct ByteReader {
  const std::string& buf;
  size_t pos = 0;
  explicit ByteReader(const std::string& b) : buf(b) {}
  uint64_t take(int nbytes, const char* what) {
    if (pos + static_cast<size_t>(nbytes) > buf.size()) {
      throw ConfigInvalid(std::string("truncated file while reading ") + what);
    }
    uint64_t v = 0;
    for (int i = 0; i < nbytes; ++i) {
      v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += static_cast<size_t>(nbytes);
    return v;
  }
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigInvalid("cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigInvalid("cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw ConfigInvalid("short write to " + path);
}

inline uint32_t bits_per_symbol(uint32_t alphabet) {
  uint32_t bits = 1;
  while ((1u << bits) < alphabet) ++bits;
  return bits;
}

}  // namespace detail

/// Saves a codebook as `path` (binary, magic "PABK") plus a `path.json`
/// sidecar holding the source distribution.
inline void save_codebook(const Codebook& cb, const std::string& path) {
  std::string out;
  out += "PABK";
  detail::put_bytes(out, 1, 4);  // version
  detail::put_bytes(out, cb.n, 4);
  detail::put_bytes(out, cb.u_alphabet, 4);
  detail::put_bytes(out, cb.total_bits, 4);
  detail::put_bytes(out, cb.bin_bits, 4);
  detail::put_bytes(out, cb.seed, 8);
  const uint32_t bps = detail::bits_per_symbol(cb.u_alphabet);
  const size_t row_bytes = (static_cast<size_t>(cb.n) * bps + 7) / 8;
  for (uint64_t r = 0; r < cb.size(); ++r) {
    std::string row(row_bytes, '\0');
    for (uint32_t i = 0; i < cb.n; ++i) {
      const uint32_t sym = cb.symbol(r, i);
      for (uint32_t b = 0; b < bps; ++b) {
        if ((sym >> b) & 1u) {
          const size_t bit = static_cast<size_t>(i) * bps + b;
          row[bit / 8] = static_cast<char>(row[bit / 8] | (1u << (bit % 8)));
        }
      }
    }
    out += row;
  }
  detail::write_file(path, out);
  detail::write_file(path + ".json", source_to_json(cb.source).dump(2) + "\n");
}

/// Loads a codebook written by save_codebook, rebuilding the in-memory
/// acceleration structures (packing and the sorted value index).
inline Codebook load_codebook(const std::string& path) {
  const std::string data = detail::read_file(path);
  detail::ByteReader rd(data);
  if (rd.take(4, "magic") != (uint64_t('P') | (uint64_t('A') << 8) | (uint64_t('B') << 16) |
                              (uint64_t('K') << 24))) {
    throw ConfigInvalid(path + " is not a codebook file (bad magic)");
  }
  const uint64_t version = rd.take(4, "version");
  if (version != 1) throw ConfigInvalid("unsupported codebook file version");

  Codebook cb;
  cb.n = static_cast<uint32_t>(rd.take(4, "n"));
  cb.u_alphabet = static_cast<uint32_t>(rd.take(4, "u_alphabet"));
  cb.total_bits = static_cast<uint32_t>(rd.take(4, "total_bits"));
  cb.bin_bits = static_cast<uint32_t>(rd.take(4, "bin_bits"));
  cb.seed = rd.take(8, "seed");
  if (cb.n == 0 || cb.u_alphabet < 2 || cb.bin_bits > cb.total_bits || cb.total_bits >= 63) {
    throw ConfigInvalid("codebook header is inconsistent");
  }

  std::ifstream side(path + ".json");
  if (!side) throw ConfigInvalid("missing codebook sidecar " + path + ".json");
  ordered_json sj;
  try {
    side >> sj;
  } catch (const ordered_json::exception& e) {
    throw ConfigInvalid(std::string("bad codebook sidecar: ") + e.what());
  }
  cb.source = source_from_json(sj);
  if (cb.source.pu_given_x.front().size() != cb.u_alphabet) {
    throw ConfigInvalid("codebook sidecar alphabet does not match the binary header");
  }

  const uint64_t rows = uint64_t(1) << cb.total_bits;
  const uint32_t bps = detail::bits_per_symbol(cb.u_alphabet);
  const size_t row_bytes = (static_cast<size_t>(cb.n) * bps + 7) / 8;
  cb.packed = (cb.u_alphabet == 2 && cb.n <= 32);
  if (cb.packed) {
    cb.rows_packed.assign(rows, 0);
  } else {
    cb.rows_bytes.assign(rows * cb.n, 0);
  }
  for (uint64_t r = 0; r < rows; ++r) {
    if (rd.pos + row_bytes > data.size()) throw ConfigInvalid("truncated codebook rows");
    for (uint32_t i = 0; i < cb.n; ++i) {
      uint32_t sym = 0;
      for (uint32_t b = 0; b < bps; ++b) {
        const size_t bit = static_cast<size_t>(i) * bps + b;
        const auto byte = static_cast<unsigned char>(data[rd.pos + bit / 8]);
        sym |= static_cast<uint32_t>((byte >> (bit % 8)) & 1u) << b;
      }
      if (sym >= cb.u_alphabet) throw ConfigInvalid("codebook row symbol outside the alphabet");
      if (cb.packed) {
        cb.rows_packed[r] |= static_cast<uint32_t>(sym) << i;
      } else {
        cb.rows_bytes[r * cb.n + i] = static_cast<uint8_t>(sym);
      }
    }
    rd.pos += row_bytes;
  }
  if (rd.pos != data.size()) throw ConfigInvalid("trailing bytes after codebook rows");
  detail::build_value_index(cb);
  return cb;
}

/// Saves a trained empirical-MAP table as `path` (binary, magic "PAMP").
inline void save_map_table(const AttackStrategy& strat, const std::string& path) {
  if (strat.kind != AttackKind::bin_empirical_map || !strat.trained) {
    throw UntrainedStrategy("only a trained MAP strategy can be saved");
  }
  std::string out;
  out += "PAMP";
  detail::put_bytes(out, 1, 4);  // version
  detail::put_bytes(out, strat.fingerprint.seed, 8);
  detail::put_bytes(out, strat.fingerprint.n, 4);
  detail::put_bytes(out, strat.fingerprint.total_bits, 4);
  detail::put_bytes(out, strat.fingerprint.bin_bits, 4);
  detail::put_bytes(out, strat.fingerprint.u_alphabet, 4);
  detail::put_bytes(out, strat.map_table.size(), 8);
  for (uint32_t s : strat.map_table) detail::put_bytes(out, s, 4);
  detail::write_file(path, out);
}

/// Loads a MAP table written by save_map_table.
inline AttackStrategy load_map_table(const std::string& path) {
  const std::string data = detail::read_file(path);
  detail::ByteReader rd(data);
  if (rd.take(4, "magic") != (uint64_t('P') | (uint64_t('A') << 8) | (uint64_t('M') << 16) |
                              (uint64_t('P') << 24))) {
    throw ConfigInvalid(path + " is not a MAP table file (bad magic)");
  }
  if (rd.take(4, "version") != 1) throw ConfigInvalid("unsupported MAP table file version");
  AttackStrategy strat{AttackKind::bin_empirical_map};
  strat.fingerprint.seed = rd.take(8, "seed");
  strat.fingerprint.n = static_cast<uint32_t>(rd.take(4, "n"));
  strat.fingerprint.total_bits = static_cast<uint32_t>(rd.take(4, "total_bits"));
  strat.fingerprint.bin_bits = static_cast<uint32_t>(rd.take(4, "bin_bits"));
  strat.fingerprint.u_alphabet = static_cast<uint32_t>(rd.take(4, "u_alphabet"));
  const uint64_t bins = rd.take(8, "num_bins");
  if (bins != (uint64_t(1) << strat.fingerprint.bin_bits)) {
    throw ConfigInvalid("MAP table bin count does not match its header");
  }
  strat.map_table.reserve(bins);
  for (uint64_t i = 0; i < bins; ++i) {
    strat.map_table.push_back(static_cast<uint32_t>(rd.take(4, "map entry")));
  }
  if (rd.pos != data.size()) throw ConfigInvalid("trailing bytes after MAP table");
  strat.trained = true;
  return strat;
}

}  // namespace pa

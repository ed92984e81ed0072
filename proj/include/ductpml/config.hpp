#pragma once

// Sectioned key=value run configuration.
//
//   [duct]   d M k omega c0 x_minus x_plus L
//   [pml]    sigma_plus sigma_minus L
//   [source] kind mode center half_width amplitude_re amplitude_im noise
//            noise_a1 noise_b1 noise_a2 noise_b2 noise_base_nx noise_base_ny noise_levels
//   [grid]   n_cells n_modes field_nx field_ny greens_nx greens_ny y1 y2 n_images
//   [run]    base_seed samples threads h_levels reference_level L_values
//            equiv_cells n_max total_samples
//
// '#' starts a comment. Lists are comma separated.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "ductpml/duct.hpp"
#include "ductpml/errors.hpp"
#include "ductpml/noise.hpp"
#include "ductpml/pml.hpp"
#include "ductpml/source.hpp"

namespace ductpml {

struct PmlSection {
  double sigma_plus = 5.0;
  double sigma_minus = 5.0;
  bool operator==(const PmlSection&) const = default;
};

struct SourceSection {
  std::string kind = "bump";  // none | box | bump
  int mode = 0;
  double center = 0.0;
  double half_width = 0.25;
  double amplitude_re = 1.0;
  double amplitude_im = 0.0;
  bool noise = false;
  std::optional<Rect> noise_rect;  // unset: middle half of the domain
  int noise_base_nx = 2;
  int noise_base_ny = 1;
  int noise_levels = 5;
  bool operator==(const SourceSection&) const = default;
};

struct GridSection {
  int n_cells = 512;
  int n_modes = -1;  // -1: N0 + 30
  int field_nx = 81;
  int field_ny = 21;
  int greens_nx = 21;
  int greens_ny = 11;
  double y1 = 0.0;   // source point of the Green's function grid
  double y2 = 0.5;
  int n_images = 512;
  bool operator==(const GridSection&) const = default;
};

struct RunSection {
  std::uint64_t base_seed = 1;
  std::size_t samples = 200;
  unsigned threads = 1;
  std::vector<int> h_levels{2, 3, 4};
  int reference_level = 6;
  std::vector<double> L_values{0.5, 1.0, 1.5, 2.0};
  std::vector<int> equiv_cells{256, 512, 1024};
  int n_max = 50;
  std::size_t total_samples = 50;
  bool operator==(const RunSection&) const = default;
};

struct RunConfig {
  DuctParams duct;
  PmlSection pml;
  SourceSection source;
  GridSection grid;
  RunSection run;

  bool operator==(const RunConfig&) const = default;

  [[nodiscard]] DuctConfig duct_config() const { return DuctConfig(duct); }
  [[nodiscard]] PmlProfile profile() const {
    return PmlProfile::quadratic(pml.sigma_plus, pml.sigma_minus, duct_config());
  }
  [[nodiscard]] Rect forcing_rect() const {
    return source.noise_rect ? *source.noise_rect : default_forcing_rect(duct_config());
  }

  /// Deterministic part of the source, zero if kind = none.
  [[nodiscard]] ModalSource modal_source() const {
    ModalSource s;
    const std::complex<double> a{source.amplitude_re, source.amplitude_im};
    if (source.kind == "bump") {
      s.modes[source.mode] = bump_source(source.center, source.half_width, a);
    } else if (source.kind == "box") {
      s.modes[source.mode] =
          box_source(source.center - source.half_width, source.center + source.half_width, a);
    }
    return s;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view v, std::size_t line, std::string_view key) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end || !std::isfinite(x)) {
    throw ParseError(line, "malformed number for " + std::string(key) + ": '" + std::string(v) + "'");
  }
  return x;
}

template <class Int>
Int parse_int(std::string_view v, std::size_t line, std::string_view key) {
  Int x = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) {
    throw ParseError(line, "malformed integer for " + std::string(key) + ": '" + std::string(v) + "'");
  }
  return x;
}

inline bool parse_bool(std::string_view v, std::size_t line, std::string_view key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParseError(line, "expected true or false for " + std::string(key));
}

template <class T, class F>
std::vector<T> parse_list(std::string_view v, F item) {
  std::vector<T> out;
  while (true) {
    const auto c = v.find(',');
    out.push_back(item(trim(v.substr(0, c))));
    if (c == std::string_view::npos) break;
    v = v.substr(c + 1);
  }
  return out;
}

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

/// Strict parse; unknown sections or keys, malformed values and violated
/// invariants raise ParseError with the offending line.
inline RunConfig parse_config(std::string_view text) {
  RunConfig rc;
  std::string section;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;  // "section.key" -> line
  std::optional<double> pml_L;
  std::optional<double> rect[4];
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section != "duct" && section != "pml" && section != "source" && section != "grid" &&
          section != "run") {
        throw ParseError(line_no, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    if (section.empty()) throw ParseError(line_no, "key outside of any section");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view val = detail::trim(line.substr(eq + 1));
    if (val.empty()) throw ParseError(line_no, "missing value for " + key);
    if (!seen.emplace(section + "." + key, line_no).second) {
      throw ParseError(line_no, "duplicate key " + key);
    }
    const std::size_t ln = line_no;
    auto num = [&] { return detail::parse_double(val, ln, key); };
    auto positive = [&](const char* what) {
      const double x = num();
      if (!(x > 0.0)) throw ParseError(ln, std::string(what) + " must be positive");
      return x;
    };
    auto count = [&](int lo) {
      const int x = detail::parse_int<int>(val, ln, key);
      if (x < lo) throw ParseError(ln, key + " must be at least " + std::to_string(lo));
      return x;
    };
    auto unknown = [&] { throw ParseError(ln, "unknown key '" + key + "' in [" + section + "]"); };

    if (section == "duct") {
      auto& d = rc.duct;
      if (key == "d") d.d = positive("duct height d");
      else if (key == "M") {
        d.M = num();
        if (!(d.M >= 0.0 && d.M < 1.0)) throw ParseError(ln, "Mach number must satisfy 0 <= M < 1");
      } else if (key == "k") d.k = positive("wavenumber k");
      else if (key == "omega") d.omega = positive("omega");
      else if (key == "c0") d.c0 = positive("sound speed c0");
      else if (key == "x_minus") d.x_minus = num();
      else if (key == "x_plus") d.x_plus = num();
      else if (key == "L") d.L = positive("layer length L");
      else unknown();
    } else if (section == "pml") {
      auto& p = rc.pml;
      if (key == "sigma_plus" || key == "sigma_minus") {
        const double x = num();
        if (!(x >= 0.0)) throw ParseError(ln, "absorption strengths must be non-negative");
        (key == "sigma_plus" ? p.sigma_plus : p.sigma_minus) = x;
      } else if (key == "L") pml_L = positive("layer length L");
      else unknown();
    } else if (section == "source") {
      auto& s = rc.source;
      if (key == "kind") {
        s.kind = std::string(val);
        if (s.kind != "none" && s.kind != "box" && s.kind != "bump") {
          throw ParseError(ln, "source kind must be none, box or bump");
        }
      } else if (key == "mode") s.mode = count(0);
      else if (key == "center") s.center = num();
      else if (key == "half_width") s.half_width = positive("half_width");
      else if (key == "amplitude_re") s.amplitude_re = num();
      else if (key == "amplitude_im") s.amplitude_im = num();
      else if (key == "noise") s.noise = detail::parse_bool(val, ln, key);
      else if (key == "noise_a1") rect[0] = num();
      else if (key == "noise_b1") rect[1] = num();
      else if (key == "noise_a2") rect[2] = num();
      else if (key == "noise_b2") rect[3] = num();
      else if (key == "noise_base_nx") s.noise_base_nx = count(1);
      else if (key == "noise_base_ny") s.noise_base_ny = count(1);
      else if (key == "noise_levels") s.noise_levels = count(1);
      else unknown();
    } else if (section == "grid") {
      auto& g = rc.grid;
      if (key == "n_cells") g.n_cells = count(8);
      else if (key == "n_modes") {
        g.n_modes = detail::parse_int<int>(val, ln, key);
        if (g.n_modes == 0 || g.n_modes < -1) throw ParseError(ln, "n_modes must be positive or -1");
      } else if (key == "field_nx") g.field_nx = count(2);
      else if (key == "field_ny") g.field_ny = count(2);
      else if (key == "greens_nx") g.greens_nx = count(2);
      else if (key == "greens_ny") g.greens_ny = count(2);
      else if (key == "y1") g.y1 = num();
      else if (key == "y2") g.y2 = num();
      else if (key == "n_images") g.n_images = count(8);
      else unknown();
    } else {
      auto& r = rc.run;
      if (key == "base_seed") r.base_seed = detail::parse_int<std::uint64_t>(val, ln, key);
      else if (key == "samples") r.samples = static_cast<std::size_t>(count(2));
      else if (key == "threads") r.threads = static_cast<unsigned>(count(0));
      else if (key == "h_levels") {
        r.h_levels = detail::parse_list<int>(val, [&](std::string_view v) {
          return detail::parse_int<int>(v, ln, key);
        });
      } else if (key == "reference_level") r.reference_level = count(1);
      else if (key == "L_values") {
        r.L_values = detail::parse_list<double>(val, [&](std::string_view v) {
          const double x = detail::parse_double(v, ln, key);
          if (!(x > 0.0)) throw ParseError(ln, "layer lengths must be positive");
          return x;
        });
      } else if (key == "equiv_cells") {
        r.equiv_cells = detail::parse_list<int>(val, [&](std::string_view v) {
          const int x = detail::parse_int<int>(v, ln, key);
          if (x < 8) throw ParseError(ln, "grids need at least 8 cells");
          return x;
        });
      } else if (key == "n_max") r.n_max = count(0);
      else if (key == "total_samples") r.total_samples = static_cast<std::size_t>(count(2));
      else unknown();
    }
  }

  auto line_of = [&](const std::string& k) {
    const auto it = seen.find(k);
    return it == seen.end() ? line_no : it->second;
  };
  if (pml_L) {
    if (seen.count("duct.L") && *pml_L != rc.duct.L) {
      throw ParseError(line_of("pml.L"), "[pml] L disagrees with [duct] L");
    }
    rc.duct.L = *pml_L;
  }
  const int given = int(rect[0].has_value()) + int(rect[1].has_value()) +
                    int(rect[2].has_value()) + int(rect[3].has_value());
  if (given != 0 && given != 4) {
    throw ParseError(line_of("source.noise_a1"), "noise rectangle needs all of noise_a1, noise_b1, noise_a2, noise_b2");
  }
  if (given == 4) rc.source.noise_rect = Rect{*rect[0], *rect[1], *rect[2], *rect[3]};

  // cross-key invariants
  try {
    const DuctConfig cfg(rc.duct);
    (void)rc.profile();
    const Rect r = rc.forcing_rect();
    if (!(r.width() > 0.0 && r.height() > 0.0) || r.a1 < cfg.x_minus() || r.b1 > cfg.x_plus() ||
        r.a2 < 0.0 || r.b2 > cfg.d()) {
      throw ConfigError("noise rectangle must be a non-empty part of the computational domain");
    }
    if (rc.source.kind != "none") {
      const double lo = rc.source.center - rc.source.half_width;
      const double hi = rc.source.center + rc.source.half_width;
      if (lo <= cfg.x_minus() || hi >= cfg.x_plus()) {
        throw ConfigError("source support must lie inside (x_minus, x_plus)");
      }
    }
    if (!(rc.grid.y2 > 0.0 && rc.grid.y2 < cfg.d())) {
      throw ConfigError("Green's source point y2 must lie in (0, d)");
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    std::string k = "duct.k";
    const std::string w = e.what();
    if (w.find("Mach") != std::string::npos) k = "duct.M";
    else if (w.find("omega") != std::string::npos) k = "duct.omega";
    else if (w.find("x_minus") != std::string::npos) k = "duct.x_plus";
    else if (w.find("noise") != std::string::npos) k = "source.noise_a1";
    else if (w.find("source support") != std::string::npos) k = "source.center";
    else if (w.find("y2") != std::string::npos) k = "grid.y2";
    throw ParseError(line_of(k), w);
  }
  for (int l : rc.run.h_levels) {
    if (l < 0 || l > rc.run.reference_level) {
      throw ParseError(line_of("run.h_levels"), "h levels must lie in [0, reference_level]");
    }
  }
  return rc;
}

/// Text that parse_config maps back onto an identical RunConfig.
inline std::string serialize_config(const RunConfig& rc) {
  using detail::fmt;
  std::ostringstream o;
  auto list = [](const auto& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      if constexpr (std::is_same_v<std::decay_t<decltype(v[i])>, double>) s += fmt(v[i]);
      else s += std::to_string(v[i]);
    }
    return s;
  };
  const auto& d = rc.duct;
  o << "[duct]\n"
    << "d = " << fmt(d.d) << "\nM = " << fmt(d.M) << "\nk = " << fmt(d.k) << "\n";
  if (d.omega) o << "omega = " << fmt(*d.omega) << "\n";
  o << "c0 = " << fmt(d.c0) << "\nx_minus = " << fmt(d.x_minus) << "\nx_plus = " << fmt(d.x_plus)
    << "\nL = " << fmt(d.L) << "\n\n";
  o << "[pml]\nsigma_plus = " << fmt(rc.pml.sigma_plus) << "\nsigma_minus = " << fmt(rc.pml.sigma_minus)
    << "\n\n";
  const auto& s = rc.source;
  o << "[source]\nkind = " << s.kind << "\nmode = " << s.mode << "\ncenter = " << fmt(s.center)
    << "\nhalf_width = " << fmt(s.half_width) << "\namplitude_re = " << fmt(s.amplitude_re)
    << "\namplitude_im = " << fmt(s.amplitude_im) << "\nnoise = " << (s.noise ? "true" : "false")
    << "\n";
  if (s.noise_rect) {
    o << "noise_a1 = " << fmt(s.noise_rect->a1) << "\nnoise_b1 = " << fmt(s.noise_rect->b1)
      << "\nnoise_a2 = " << fmt(s.noise_rect->a2) << "\nnoise_b2 = " << fmt(s.noise_rect->b2) << "\n";
  }
  o << "noise_base_nx = " << s.noise_base_nx << "\nnoise_base_ny = " << s.noise_base_ny
    << "\nnoise_levels = " << s.noise_levels << "\n\n";
  const auto& g = rc.grid;
  o << "[grid]\nn_cells = " << g.n_cells << "\nn_modes = " << g.n_modes << "\nfield_nx = " << g.field_nx
    << "\nfield_ny = " << g.field_ny << "\ngreens_nx = " << g.greens_nx << "\ngreens_ny = " << g.greens_ny
    << "\ny1 = " << fmt(g.y1) << "\ny2 = " << fmt(g.y2) << "\nn_images = " << g.n_images << "\n\n";
  const auto& r = rc.run;
  o << "[run]\nbase_seed = " << r.base_seed << "\nsamples = " << r.samples << "\nthreads = " << r.threads
    << "\nh_levels = " << list(r.h_levels) << "\nreference_level = " << r.reference_level
    << "\nL_values = " << list(r.L_values) << "\nequiv_cells = " << list(r.equiv_cells)
    << "\nn_max = " << r.n_max << "\ntotal_samples = " << r.total_samples << "\n";
  return o.str();
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ductpml

#pragma once

// JSON views of the library's result types (schemas in docs/formats.md).

#include <json.hpp>

#include "sheafcx/bound_calculus.hpp"
#include "sheafcx/complexity_curve.hpp"
#include "sheafcx/equidist.hpp"
#include "sheafcx/sum_engine.hpp"

namespace sheafcx::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

inline Json complex_json(cplx z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

inline Json complex_list(const std::vector<cplx>& zs) {
  Json a = Json::array();
  for (const auto& z : zs) a.push_back(complex_json(z));
  return a;
}

inline Json to_json(const SumResult& r) {
  return Json{{"value", complex_json(r.value)},
              {"abs", std::abs(r.value)},
              {"npoints", r.npoints},
              {"normalization", r.normalization.to_string()},
              {"fp_error_bound", r.fp_error_bound}};
}

inline Json to_json(const LPolynomialEstimate& e) {
  Json singular = Json::array();
  for (double s : e.singular_values) singular.push_back(s);
  return Json{{"degree", e.degree},
              {"chi_c", e.chi_c},
              {"polynomial_mode", e.polynomial_mode},
              {"residual", e.residual},
              {"recurrence", complex_list(e.recurrence)},
              {"power_sums", complex_list(e.power_sums)},
              {"singular_values", singular}};
}

inline Json to_json(const FrobeniusSpectrum& s) {
  Json eig = Json::array();
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    Json z = complex_json(s.eigenvalues[i]);
    z["abs"] = std::abs(s.eigenvalues[i]);
    z["multiplicity"] = s.multiplicities[i];
    eig.push_back(z);
  }
  return Json{{"eigenvalues", eig}, {"betti_sum", s.betti_sum()}};
}

inline Json to_json(const SingularPoint& sp) {
  return Json{{"place", sp.place.to_string()}, {"degree", sp.place.degree()}, {"drop", sp.drop},
              {"swan", sp.swan},             {"jump", sp.jump},                {"tame", sp.tame}};
}

inline Json to_json(const CurveSheafInvariants& inv) {
  Json sing = Json::array(), van = Json::array();
  for (const auto& sp : inv.singular_points) sing.push_back(to_json(sp));
  for (const auto& sp : inv.vanishing_points) van.push_back(to_json(sp));
  return Json{{"rank", inv.rank}, {"singular_points", sing}, {"vanishing_points", van}, {"total_swan", inv.total_swan()}};
}

inline Json to_json(const ComplexityValue& c) {
  if (c.kind == ComplexityValue::Kind::Exact) return Json{{"kind", "exact"}, {"value", c.value()}};
  return Json{{"kind", "bounds"}, {"lower", c.lower}, {"upper", c.upper}};
}

inline Json to_json(const TrailEntry& t) {
  Json kids = Json::array();
  for (const auto& c : t.children) kids.push_back(to_json(c));
  Json j{{"rule", t.rule},
         {"ambient", t.ambient},
         {"constant", t.constant_symbol.empty() ? rational_string(t.constant) : t.constant_symbol},
         {"ref", t.reference},
         {"numeric", t.numeric}};
  if (t.numeric) j["value"] = rational_string(t.value);
  else j["symbolic"] = t.symbolic;
  j["children"] = kids;
  return j;
}

inline Json to_json(const ComplexityBound& b) {
  Json j{{"numeric", b.numeric}, {"display", b.display()}};
  if (b.numeric) j["value"] = rational_string(b.value);
  j["trail"] = to_json(b.trail);
  return j;
}

inline Json to_json(const FamilyDescriptor& d) {
  Json j{{"n", d.n}, {"d", d.d}, {"p", d.p}, {"variant", to_string(d.variant)},
         {"mode", d.mode == FamilyMode::Exhaustive ? "exhaustive" : "sample"}};
  if (d.mode == FamilyMode::Sample) {
    j["count"] = d.count;
    j["seed"] = d.seed;
  }
  return j;
}

inline Json moment_json(const MomentEstimate& m) { return Json{{"value", complex_json(m.value)}, {"stderr", m.stderr_}}; }

inline Json to_json(const MomentReport& r) {
  Json ms = Json::array();
  for (const auto& m : r.moments)
    ms.push_back(Json{{"a", m.a},
                      {"b", m.b},
                      {"empirical", moment_json(m.empirical)},
                      {"oracle", moment_json(m.oracle)},
                      {"allowance", m.allowance},
                      {"z", m.z},
                      {"pass", m.pass}});
  return Json{{"family", to_json(r.family)},
              {"family_size", r.family_size},
              {"group", to_string(r.group)},
              {"N", r.N},
              {"oracle_samples", r.options.oracle_samples},
              {"oracle_seed", r.options.oracle_seed},
              {"c_sys", r.options.c_sys},
              {"threshold", r.options.threshold},
              {"real_family", r.real_family},
              {"max_abs_imag", r.max_abs_imag},
              {"real_check", r.real_check},
              {"moments", ms},
              {"verdict", r.verdict ? "PASS" : "FAIL"}};
}

}  // namespace sheafcx::io

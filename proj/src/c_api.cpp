#include "halfline/halfline.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "halfline/cascade.hpp"
#include "halfline/errors.hpp"
#include "halfline/phase.hpp"
#include "halfline/runner.hpp"
#include "halfline/spectral.hpp"

struct hl_state {
  halfline::SpectralState value;
};

struct hl_trajectory {
  halfline::Trajectory value;
};

namespace {

thread_local std::string last_error;

hl_status set_error(hl_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class F>
hl_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return HL_OK;
  } catch (const halfline::Error& e) {
    return set_error(static_cast<hl_status>(static_cast<int>(e.code())), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(HL_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(HL_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(HL_INTERNAL, e.what());
  } catch (...) {
    return set_error(HL_INTERNAL, "unknown exception");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void need(const void* p, const char* name) {
  if (!p) halfline::fail(halfline::ErrorCode::InvalidArgument, std::string(name) + " is null");
}

}  // namespace

extern "C" {

const char* hl_version(void) { return halfline::tool_version(); }

const char* hl_last_error(void) { return last_error.c_str(); }

const char* hl_status_name(hl_status s) {
  switch (s) {
    case HL_OK: return "ok";
    case HL_INVALID_ARGUMENT: return "invalid argument";
    case HL_TRUNCATION_MISMATCH: return "truncation mismatch";
    case HL_OVERFLOW: return "overflow";
    case HL_QUADRATURE_NONCONVERGENCE: return "quadrature nonconvergence";
    case HL_NON_CONTRACTION: return "non-contraction";
    case HL_MAX_ITERATIONS: return "max iterations";
    case HL_DOMAIN: return "domain";
    case HL_INTERNAL: return "internal";
  }
  return "unknown";
}

void hl_free_string(char* s) { std::free(s); }

hl_status hl_state_create(const double* re_im, size_t truncation, double time, hl_state** out) {
  return guarded([&] {
    need(re_im, "re_im");
    need(out, "out");
    halfline::Coeffs c(truncation + 1);
    for (size_t n = 0; n <= truncation; ++n) c[n] = {re_im[2 * n], re_im[2 * n + 1]};
    *out = new hl_state{halfline::SpectralState(std::move(c), time)};
  });
}

hl_status hl_state_from_json(const char* json, hl_state** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new hl_state{halfline::state_from_json(nlohmann::json::parse(json))};
  });
}

hl_status hl_state_to_json(const hl_state* s, char** out) {
  return guarded([&] {
    need(s, "state");
    need(out, "out");
    *out = dup_string(halfline::to_json(s->value).dump());
  });
}

hl_status hl_state_truncation(const hl_state* s, size_t* out) {
  return guarded([&] {
    need(s, "state");
    need(out, "out");
    *out = s->value.truncation();
  });
}

hl_status hl_state_coeff(const hl_state* s, size_t n, double* re, double* im) {
  return guarded([&] {
    need(s, "state");
    need(re, "re");
    need(im, "im");
    if (n > s->value.truncation())
      halfline::fail(halfline::ErrorCode::TruncationMismatch, "mode " + std::to_string(n) + " beyond truncation");
    *re = s->value[n].real();
    *im = s->value[n].imag();
  });
}

hl_status hl_state_sobolev_norm(const hl_state* s, double exponent, double* out) {
  return guarded([&] {
    need(s, "state");
    need(out, "out");
    *out = halfline::sobolev_norm(s->value, exponent);
  });
}

hl_status hl_state_convolve(const hl_state* a, const hl_state* b, hl_state** out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    *out = new hl_state{halfline::SpectralState(halfline::convolve(a->value.coeffs(), b->value.coeffs()),
                                                a->value.time())};
  });
}

hl_status hl_state_power(const hl_state* a, unsigned exponent, hl_state** out) {
  return guarded([&] {
    need(a, "a");
    need(out, "out");
    *out = new hl_state{halfline::SpectralState(halfline::power(a->value.coeffs(), exponent), a->value.time())};
  });
}

void hl_state_free(hl_state* s) { delete s; }

hl_status hl_phase(double alpha, const unsigned long long* indices, size_t count, double* out) {
  return guarded([&] {
    need(indices, "indices");
    need(out, "out");
    std::vector<std::uint64_t> idx(indices, indices + count);
    *out = halfline::phase(alpha, idx);
  });
}

hl_status hl_phase_lower_bound(double alpha, const unsigned long long* indices, size_t count, double* out) {
  return guarded([&] {
    need(indices, "indices");
    need(out, "out");
    std::vector<std::uint64_t> idx(indices, indices + count);
    *out = halfline::phase_lower_bound(alpha, idx);
  });
}

hl_status hl_certify_phase_bound(double alpha, int k, unsigned long long cap, int* pass) {
  return guarded([&] {
    need(pass, "pass");
    *pass = halfline::certify_phase_bound(alpha, k, cap).pass ? 1 : 0;
  });
}

hl_status hl_simulate(const char* spec_json, const hl_state* phi, double T, double tol, hl_trajectory** out) {
  return guarded([&] {
    need(spec_json, "spec_json");
    need(phi, "phi");
    need(out, "out");
    const auto spec = halfline::spec_from_json(nlohmann::json::parse(spec_json));
    halfline::CascadeOptions opt;
    if (tol > 0.0) opt.tol = tol;
    *out = new hl_trajectory{halfline::cascade_integrate(phi->value, spec, T, opt)};
  });
}

hl_status hl_trajectory_final_time(const hl_trajectory* tr, double* out) {
  return guarded([&] {
    need(tr, "trajectory");
    need(out, "out");
    *out = tr->value.final_time();
  });
}

hl_status hl_trajectory_state_at(const hl_trajectory* tr, double t, hl_state** out) {
  return guarded([&] {
    need(tr, "trajectory");
    need(out, "out");
    if (!(t >= 0.0 && t <= tr->value.final_time()))
      halfline::fail(halfline::ErrorCode::Domain, "time outside [0, T]");
    *out = new hl_state{tr->value.state_at(t)};
  });
}

hl_status hl_trajectory_to_json(const hl_trajectory* tr, size_t max_samples, char** out) {
  return guarded([&] {
    need(tr, "trajectory");
    need(out, "out");
    *out = dup_string(tr->value.to_json(max_samples).dump());
  });
}

void hl_trajectory_free(hl_trajectory* tr) { delete tr; }

hl_status hl_run(const char* subcommand, const char* params_json, char** result_json, int* verdict) {
  return guarded([&] {
    need(subcommand, "subcommand");
    need(params_json, "params_json");
    need(result_json, "result_json");
    nlohmann::json params;
    try {
      params = nlohmann::json::parse(params_json);
    } catch (const nlohmann::json::parse_error& e) {
      halfline::fail(halfline::ErrorCode::InvalidArgument,
                     "malformed parameters at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    const halfline::RunResult r = halfline::run_subcommand(subcommand, params);
    nlohmann::json doc = {{"output", r.output}, {"csv", r.csv}, {"manifest", r.manifest}, {"pass", r.pass}};
    *result_json = dup_string(doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
    if (verdict) *verdict = r.pass ? 1 : 0;
  });
}

}  // extern "C"

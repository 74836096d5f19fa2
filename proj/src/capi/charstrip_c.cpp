#include "charstrip/charstrip.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "config.hpp"
#include "error.hpp"
#include "scenarios.hpp"

struct cs_config {
    charstrip::RunConfig cfg;
};

struct cs_result {
    charstrip::RunResult res;
    std::string failed;
};

namespace {

thread_local std::string g_error;
thread_local cs_progress_fn g_progress = nullptr;
thread_local void* g_progress_user = nullptr;

cs_status status_of(charstrip::ErrorCode code) {
    return static_cast<cs_status>(charstrip::exit_code(code));
}

// Runs body and converts exceptions into status codes.
template <class Fn>
cs_status guarded(Fn&& body) {
    g_error.clear();
    try {
        return body();
    } catch (const charstrip::Error& e) {
        g_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        g_error = "out of memory";
        return CS_RESOURCE_LIMIT;
    } catch (const std::exception& e) {
        g_error = e.what();
        return CS_INTERNAL;
    }
}

cs_status null_arg(const char* what) {
    g_error = std::string(what) + " must not be NULL";
    return CS_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* cs_version(void) { return "1.0.0"; }

const char* cs_status_name(cs_status status) {
    switch (status) {
        case CS_OK: return "Ok";
        case CS_VERDICT_FAILED: return "VerdictFailed";
        case CS_USAGE: return "Usage";
        case CS_INTERNAL: return "Internal";
        default: break;
    }
    const int idx = static_cast<int>(status) - 10;
    if (idx >= 0 && idx <= static_cast<int>(charstrip::ErrorCode::ResourceLimit))
        return charstrip::error_name(static_cast<charstrip::ErrorCode>(idx));
    return "Unknown";
}

const char* cs_last_error(void) { return g_error.c_str(); }

cs_status cs_config_load(const char* path, cs_config** out) {
    if (!path) return null_arg("path");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guarded([&] {
        *out = new cs_config{charstrip::load_config(path)};
        return CS_OK;
    });
}

cs_status cs_config_parse(const char* text, cs_config** out) {
    if (!text) return null_arg("text");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guarded([&] {
        *out = new cs_config{charstrip::parse_config(text)};
        return CS_OK;
    });
}

cs_status cs_config_set_grid(cs_config* cfg, int nx, int nt) {
    if (!cfg) return null_arg("cfg");
    return guarded([&] {
        auto& c = cfg->cfg;
        if (nx < 0 || nt < 0 || (nx > 0 && nx < 8) || (nt > 0 && nt < 8))
            charstrip::fail(charstrip::ErrorCode::InvalidArgument, "grid sizes must be at least 8");
        if (c.counterexample) {
            if (nx) c.counterexample->nx = nx;
            if (nt) c.counterexample->nt_list = {nt};
        }
        if (c.grid) {
            charstrip::Grid g = *c.grid;
            c.grid = charstrip::Grid(nx ? nx : g.nx, charstrip::TimeGrid(g.time.topology(), nt ? nt : g.nt()));
        }
        return CS_OK;
    });
}

const char* cs_config_command(const cs_config* cfg) { return cfg ? cfg->cfg.command.c_str() : ""; }

void cs_config_free(cs_config* cfg) { delete cfg; }

void cs_set_progress(cs_progress_fn fn, void* user) {
    g_progress = fn;
    g_progress_user = user;
}

cs_status cs_run(const cs_config* cfg, const char* command, const char* out_dir, cs_result** out) {
    if (!cfg) return null_arg("cfg");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guarded([&] {
        charstrip::RunOptions opts;
        charstrip::RunConfig c = cfg->cfg;
        if (out_dir) {
            c.output.dir = out_dir;
            opts.out_dir = out_dir;
        }
        if (g_progress) {
            cs_progress_fn fn = g_progress;
            void* user = g_progress_user;
            opts.progress = [fn, user](const std::string& line) { fn(line.c_str(), user); };
        }
        auto* r = new cs_result{charstrip::run(c, command ? command : "", opts), {}};
        for (const auto& f : r->res.failed_verdicts) r->failed += (r->failed.empty() ? "" : ",") + f;
        *out = r;
        return r->res.verdict ? CS_OK : CS_VERDICT_FAILED;
    });
}

const char* cs_result_json(const cs_result* res) { return res ? res->res.json.c_str() : ""; }
const char* cs_result_summary(const cs_result* res) { return res ? res->res.summary.c_str() : ""; }
int cs_result_verdict(const cs_result* res) { return res && res->res.verdict ? 1 : 0; }
const char* cs_result_failed(const cs_result* res) { return res ? res->failed.c_str() : ""; }

cs_status cs_result_field(const cs_result* res, const char* name, cs_field_view* view) {
    if (!res) return null_arg("res");
    if (!name) return null_arg("name");
    if (!view) return null_arg("view");
    g_error.clear();
    auto it = res->res.fields.find(name);
    if (it == res->res.fields.end()) {
        g_error = std::string("no field named ") + name + " in this result";
        return CS_INVALID_ARGUMENT;
    }
    const auto& f = it->second;
    const auto& g = f.grid();
    view->components = f.components();
    view->nx = g.nx;
    view->nt = g.nt();
    view->periodic = g.time.periodic() ? 1 : 0;
    view->t_lo = g.time.t_lo();
    view->dt = g.time.step();
    view->values = f.data().data();
    return CS_OK;
}

void cs_result_free(cs_result* res) { delete res; }

cs_status cs_dump_characteristic(const cs_config* cfg, int family, double x, double t, char** csv) {
    if (!cfg) return null_arg("cfg");
    if (!csv) return null_arg("csv");
    *csv = nullptr;
    return guarded([&] {
        std::string s = charstrip::characteristic_csv(cfg->cfg, family, x, t);
        char* p = static_cast<char*>(std::malloc(s.size() + 1));
        if (!p) throw std::bad_alloc();
        std::memcpy(p, s.c_str(), s.size() + 1);
        *csv = p;
        return CS_OK;
    });
}

void cs_string_free(char* s) { std::free(s); }

}  // extern "C"

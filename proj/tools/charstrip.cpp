// Command-line front end. Everything goes through the C interface.
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "charstrip/charstrip.h"

namespace {

void print_progress(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

int report_error(cs_status st) {
    std::fprintf(stderr, "charstrip: %s: %s\n", cs_status_name(st), cs_last_error());
    return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperbolic boundary-value problems on the strip [0,1] x R"};
    app.set_version_flag("--version", std::string(cs_version()));
    app.require_subcommand(1);

    std::string config, out_dir;
    int nx = 0, nt = 0;
    bool quiet = false, no_out = false;
    std::vector<double> dump;

    const std::pair<const char*, const char*> commands[] = {
        {"check", "evaluate the boundary conditions without solving"},
        {"solve-linear", "solve a linear problem by Picard iteration"},
        {"solve-quasilinear", "solve a quasilinear problem by outer linearization"},
        {"counterexample", "run the loss-of-regularity experiment"},
    };
    for (auto [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config,-c", config, "TOML scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out,-o", out_dir, "output directory (overrides [output].dir)");
        sub->add_flag("--no-output", no_out, "write no files");
        sub->add_option("--nx", nx, "spatial cells")->check(CLI::Range(8, 1 << 20));
        sub->add_option("--nt", nt, "time nodes")->check(CLI::Range(8, 1 << 24));
        sub->add_flag("--quiet,-q", quiet, "suppress progress lines");
        sub->add_option("--dump-characteristic", dump, "j,x,t: print one characteristic as CSV and exit")
            ->delimiter(',')
            ->expected(3);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    cs_config* cfg = nullptr;
    cs_status st = cs_config_load(config.c_str(), &cfg);
    if (st != CS_OK) return report_error(st);

    if (nx || nt) {
        st = cs_config_set_grid(cfg, nx, nt);
        if (st != CS_OK) {
            cs_config_free(cfg);
            return report_error(st);
        }
    }

    if (!dump.empty()) {
        char* csv = nullptr;
        st = cs_dump_characteristic(cfg, static_cast<int>(dump[0]), dump[1], dump[2], &csv);
        cs_config_free(cfg);
        if (st != CS_OK) return report_error(st);
        std::fputs(csv, stdout);
        cs_string_free(csv);
        return 0;
    }

    if (!quiet) cs_set_progress(print_progress, nullptr);
    cs_result* res = nullptr;
    const char* dir = no_out ? "" : (out_dir.empty() ? nullptr : out_dir.c_str());
    st = cs_run(cfg, command.c_str(), dir, &res);
    cs_config_free(cfg);
    if (st != CS_OK && st != CS_VERDICT_FAILED) return report_error(st);

    std::fputs(cs_result_summary(res), stdout);
    if (st == CS_VERDICT_FAILED) std::printf("verdict: FAIL (%s)\n", cs_result_failed(res));
    else std::printf("verdict: PASS\n");
    cs_result_free(res);
    return static_cast<int>(st);
}

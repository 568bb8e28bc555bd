// Acceptance run: one PASS/FAIL line per criterion. Reports are written to
// the output directory (default ./acceptance_reports).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gfrag/gfrag.hpp"

#ifndef GFRAG_DATA_DIR
#define GFRAG_DATA_DIR "data"
#endif

using namespace gfrag;

namespace {

ModelParams model(const std::string& name) { return load_model_file(std::string(GFRAG_DATA_DIR) + "/models/" + name + ".json"); }

struct Criterion {
    int id;
    std::string title;
    double budget_s;  ///< 0: no runtime bound
    std::function<std::vector<SuiteReport>()> run;
};

std::vector<Criterion> criteria() {
    const unsigned th = resolve_threads(0);
    const auto A = model("a"), B = model("b"), C = model("c"), D = model("d"), Dpos = model("d_pos"),
               W = model("brownian");
    std::vector<Criterion> list;
    list.push_back({1, "kappa calculus on configs A-D", 1.0, [=] {
                        return std::vector{verify_kappa({{"A", A}, {"B", B}, {"C", C}, {"D", D}})};
                    }});
    list.push_back({2, "Levy exponential-moment identity", 30.0, [=] {
                        return std::vector{verify_levy({{"A", A}, {"D", D}}, 2.0, {0.5, 1.0, 2.0}, 1.0, 100'000, 1002, th)};
                    }});
    list.push_back({3, "homogeneous triangle (branching, spine, exact)", 120.0, [=] {
                        return std::vector{verify_homogeneous(A, 1.0, {0.0, 2.0, 3.0}, 10'000, 100'000, 2.0, 1003, th)};
                    }});
    list.push_back({4, "support bound", 0.0, [=] { return std::vector{verify_support(A, 1000, 2.0, 1004)}; }});
    list.push_back({5, "T2 moments, alpha < 0", 180.0, [=] {
                        return std::vector{verify_t2_suite(D, {0.5, 1.0}, 2, 100'000, 1e-3, 1005, th)};
                    }});
    list.push_back({6, "spontaneous generation (entrance laws)", 180.0, [=] {
                        return std::vector{
                            verify_entrance_negative(D, {0.1, 0.01}, 1.0, 100'000, 1e-3, 1006, 0.05, th),
                            verify_entrance_slope(Dpos, 0.5, {0.5, 1.0, 2.0}, 0.01, 20'000, 1e-3, 10'006, 0.15, th)};
                    }});
    list.push_back({7, "killed pssMp laws", 120.0, [=] {
                        return std::vector{verify_suplaw(Dpos, 1.0, {2.0, 4.0, 8.0}, 1.5, 100'000, 1e-3, 1007, th)};
                    }});
    list.push_back({8, "explosion in [1,2]", 600.0, [=] {
                        return std::vector{
                            verify_explosion(C, 1.0, 2.0, {10, 100}, SimCaps{10'000'000, 1e-8, 10.0}, 100, 0.9, 1008)};
                    }});
    list.push_back({9, "large deviations", 60.0, [=] { return std::vector{verify_tails(W, 1.0, 20.0, 100'000, 1009, 0.2, th)}; }});
    list.push_back({10, "local limit asymptotic", 60.0, [=] {
                        return std::vector{
                            verify_clt(W, parse_test_function("indicator:0.8:1.25"), 25.0, 100'000, 1010, 0.25, th)};
                    }});
    list.push_back({11, "rescaling convergence", 180.0, [=] {
                        return std::vector{verify_rescaling(D, {1.0, 4.0, 16.0}, parse_test_function("clipped:1:1"),
                                                            100'000, 1e-3, 1e-3, 1011, th)};
                    }});
    return list;
}

void print_line(int id, bool pass, const std::string& title, const std::string& note) {
    std::printf("criterion %2d  %s  %s%s\n", id, pass ? "PASS" : "FAIL", title.c_str(), note.c_str());
    std::fflush(stdout);
}

std::string seconds(double s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f s", s);
    return buf;
}

std::string failing_checks(const std::vector<SuiteReport>& reps) {
    std::string out;
    for (const auto& r : reps)
        for (const auto& c : r.checks)
            if (!c.pass) out += "\n      failed: " + c.claim + " (formula " + format_double(c.formula_value) +
                                ", got " + format_double(c.mc_mean) + ", rule " + c.rule + ")";
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> only;
    std::string out_dir = "acceptance_reports";
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
    app.add_option("--out-dir", out_dir, "directory for JSON reports");
    CLI11_PARSE(app, argc, argv);
    const std::set<int> selected(only.begin(), only.end());
    auto wanted = [&](int id) { return selected.empty() || selected.count(id); };

    std::filesystem::create_directories(out_dir);
    int passed = 0, total = 0;
    std::vector<std::pair<int, std::vector<std::string>>> first_pass;

    try {
        const auto list = criteria();
        for (const auto& c : list) {
            if (!wanted(c.id)) continue;
            const auto start = std::chrono::steady_clock::now();
            const auto reps = c.run();
            const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            bool ok = true;
            std::vector<std::string> texts;
            for (std::size_t i = 0; i < reps.size(); ++i) {
                ok = ok && reps[i].pass();
                texts.push_back(report_text(reps[i]));
                write_file_atomic(out_dir + "/criterion_" + std::to_string(c.id) + "_" + reps[i].suite + ".json",
                                  texts.back());
            }
            std::string note = "  (" + seconds(dt);
            if (c.budget_s > 0.0) {
                note += ", budget " + seconds(c.budget_s);
                if (dt > c.budget_s) {
                    ok = false;
                    note += ", over budget";
                }
            }
            note += ")";
            if (!ok) note += failing_checks(reps);
            print_line(c.id, ok, c.title, note);
            ++total;
            if (ok) ++passed;
            if (c.id >= 2) first_pass.emplace_back(c.id, std::move(texts));
        }

        if (wanted(12)) {
            const auto start = std::chrono::steady_clock::now();
            bool same = !first_pass.empty();
            std::string diffs;
            for (const auto& [id, texts] : first_pass) {
                const auto& c = list[static_cast<std::size_t>(id - 1)];
                const auto reps = c.run();
                bool equal = reps.size() == texts.size();
                for (std::size_t i = 0; equal && i < reps.size(); ++i) equal = report_text(reps[i]) == texts[i];
                if (!equal) {
                    same = false;
                    diffs += " " + std::to_string(id);
                }
            }
            const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            std::string note = "  (" + std::to_string(first_pass.size()) + " criteria rerun, " + seconds(dt) + ")";
            if (first_pass.empty()) note += "\n      nothing to rerun";
            if (!diffs.empty()) note += "\n      differing reports:" + diffs;
            print_line(12, same, "determinism: byte-identical reruns", note);
            ++total;
            if (same) ++passed;
        }
    } catch (const Error& e) {
        std::cerr << "acceptance aborted: " << e.what() << "\n";
        return 2;
    }

    std::printf("acceptance: %d/%d criteria passed\n", passed, total);
    return passed == total ? 0 : 1;
}

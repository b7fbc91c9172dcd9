// Times the serial and OpenMP stratum scans on the same task set and checks
// they produce identical results.
#include <chrono>
#include <cstdio>

#include "taskdiff/difficulty.hpp"
#include "taskdiff/task.hpp"

using namespace taskdiff;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    const int l_max = argc > 1 ? std::atoi(argv[1]) : 16;
    MachineConfig mc;
    const ToleranceConfig tol;
    SearchOptions opts;
    opts.l_max = l_max;

    std::vector<TaskSpec> tasks;
    const Word id_gen[] = {static_cast<Word>(Op::Write), static_cast<Word>(Op::Inc),
                           mc.end_word()};
    tasks.push_back(make_track_task(Program{{id_gen, id_gen + 3}, 12}, 4, mc));
    const Word k3[] = {static_cast<Word>(Op::Write), static_cast<Word>(Op::Inc),
                       static_cast<Word>(Op::Inc), static_cast<Word>(Op::Inc),
                       mc.end_word()};
    tasks.push_back(make_track_task(Program{{k3, k3 + 5}, 20}, 4, mc));
    tasks.push_back(make_degenerate(TaskFamily::Heaven, 4));
    tasks.push_back(make_degenerate(TaskFamily::Hell, 4));

    std::printf("stratum scans up to %d bits over %zu tasks\n", l_max, tasks.size());
    for (bool parallel : {false, true}) {
        const auto t0 = clock_type::now();
        long total_acceptable = 0;
        for (const TaskSpec& mu : tasks)
            for (int h = mc.word_size_c; h <= l_max; h += mc.word_size_c) {
                SearchOptions o = opts;
                o.parallel = parallel;
                total_acceptable += scan_stratum(mu, h, tol, mc, o).acceptable_count;
            }
        std::printf("%-8s %8.3f s   acceptable=%ld\n", parallel ? "openmp" : "serial",
                    seconds_since(t0), total_acceptable);
    }
    return 0;
}

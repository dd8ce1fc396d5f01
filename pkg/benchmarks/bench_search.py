"""Compare the compiled and pure-Python section-search kernels.

Run:  python benchmarks/bench_search.py [--repeat N]
"""

import argparse
import statistics
import time

from qcontexts._kernel import _section_search_py as pure
from qcontexts.ks import compile_problem, load_rayset, poset_from_rayset

try:
    from qcontexts._kernel import _section_search as compiled
except ImportError:
    compiled = None


def flatten(problem):
    return (list(problem.natoms), list(problem.child_offsets),
            list(problem.child_ids), list(problem.map_offsets),
            list(problem.map_data), len(problem.slot_ids))


def bench(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        solutions, nodes = fn(*args, True, 0)
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times), solutions, nodes


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    for name, pairs in (("ks18", False), ("peres33", True), ("dim2_two_bases", False)):
        rayset = load_rayset(name)
        poset = poset_from_rayset(rayset, include_pairs=pairs)
        prob = flatten(compile_problem(poset))
        best_py, med_py, sol_py, nodes_py = bench(pure.search_sections, prob,
                                                  args.repeat)
        line = (f"{name:>16}  contexts={len(poset):3d}  nodes={nodes_py:6d}  "
                f"sections={len(sol_py):3d}  pure: {med_py * 1e3:8.3f} ms")
        if compiled is not None:
            best_c, med_c, sol_c, nodes_c = bench(compiled.search_sections,
                                                  prob, args.repeat)
            assert sol_c == sol_py and nodes_c == nodes_py
            line += (f"  compiled: {med_c * 1e3:8.3f} ms"
                     f"  speedup: {med_py / med_c:5.1f}x")
        else:
            line += "  (compiled kernel not built)"
        print(line)


if __name__ == "__main__":
    main()

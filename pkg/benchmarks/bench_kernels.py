"""Compare compiled and pure-Python sweep kernels on the bundled city.

    python benchmarks/bench_kernels.py [repeat]
"""

import sys

from aggvi.bench import run_benchmark

if __name__ == "__main__":
    repeat = int(sys.argv[1]) if len(sys.argv) > 1 else 3
    for line in run_benchmark(repeat):
        print(line)

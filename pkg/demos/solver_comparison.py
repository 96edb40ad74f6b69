"""
Comparing the inner solvers
===========================

Runs the small benchmark suite and prints the report as CSV together with a
per-solver summary.  Use ``lrt bench`` for the full 20-instance suite.
"""

from lrt.bench import make_suite, run_benchmark

suite = make_suite("tiny", seed=1)
report = run_benchmark(suite, ["direct", "sgs", "sgs_g"])
print(report.to_csv())
for line in report.summary():
    print(line)

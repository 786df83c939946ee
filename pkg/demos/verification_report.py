"""Run the full analytic-versus-oracle comparison and print a short table.

Usage: ``python3 demos/verification_report.py [model.json] [N]``. Without
arguments the scalar reference model is checked at N = 200.
"""

import sys

from qbd2d.model import load_model, model_m1
from qbd2d.verify import verify

m = load_model(sys.argv[1]) if len(sys.argv) > 1 else model_m1()
N = int(sys.argv[2]) if len(sys.argv) > 2 else 200

report = verify(m, N)
for check in report.checks:
    print("%-24s %-5s value %-11.3e threshold %.1e"
          % (check.name, "ok" if check.passed else "FAIL", check.value, check.threshold))
print("\noverall:", "passed" if report.passed else "FAILED")
sys.exit(0 if report.passed else 1)

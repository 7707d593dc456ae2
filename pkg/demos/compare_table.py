"""Convergence table over eps in {0.04, 0.02, 0.01}: L1 distances to both sharp limits.

Same output as ``hypac compare`` with the default settings; takes a couple
of minutes on one core.
"""

import sys

from hypac.experiments import load_config, run_experiment
from hypac.io import read_csv

out = sys.argv[1] if len(sys.argv) > 1 else "demo_out/compare"
cfg = load_config(None, mode="compare", eps_list=(0.04, 0.02, 0.01), frame_T=0.14)
code, rep = run_experiment(cfg, out, workers=1)
tab = read_csv(f"{out}/compare.csv")
print(f"{'eps':>6} {'l1 to omega_eps':>16} {'l1 to omega_0':>14} {'sup gap':>10} {'max d_eps':>10}")
for i, eps in enumerate(tab["eps"]):
    print(f"{eps:6.2f} {tab['l1_omega_eps'][i]:16.6f} {tab['l1_omega_0'][i]:14.6f} {tab['sup_gap'][i]:10.2e} {tab['d_eps_max'][i]:10.2e}")
print("exit code", code)

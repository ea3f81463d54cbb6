"""
A small sweep over random games
===============================

Solve a batch of random three-player games and summarize the ESS counts,
their support sizes and how each equilibrium was decided.
"""

from multiess.experiment import render_report, run_sweep
from multiess.game import SolverConfig

doc = run_sweep(K=3, count=25, seed=1, config=SolverConfig())
print(render_report([doc]))

###############################################################################
# Every game keeps its derived seed, so any single one can be re-run alone.
from multiess.ess import compute_all_ess
from multiess.game import random_game

rec = max(doc["games"], key=lambda r: len(r["ess"]))
run = compute_all_ess(random_game(3, 3, rec["seed"]))
print(f"game {rec['index']} has {len(run.ess)} ESS:", [c.strategy.probs.round(4).tolist() for c in run.ess])

"""
Stable strategies of the bundled example games
==============================================

Load each bundled three-player game, enumerate its symmetric equilibria
and print how every one of them was classified.
"""

from importlib import resources

from multiess.ess import compute_all_ess
from multiess.experiment import format_strategy
from multiess.game import load_game

###############################################################################
# The eight games ship inside the package.
folder = resources.files("multiess") / "games"

for i in range(1, 9):
    game = load_game(folder / f"game{i}")
    run = compute_all_ess(game)
    print(f"{game.name}")
    for cert in run.certificates:
        margin = "" if cert.margin is None else f"  F*={cert.margin:+.2e}"
        print(f"   {format_strategy(cert.strategy.probs)}  {cert.verdict.value:<7} {cert.describe_path()}{margin}")
    print()

###############################################################################
# Rock-paper-scissors has a single interior equilibrium. The mixed-mutant
# program reports a flat margin there: every mutant does exactly as well.
rps = load_game(folder / "game4")
print(compute_all_ess(rps).certificates[0])

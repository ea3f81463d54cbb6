"""
Finding a second equilibrium on the same support
================================================

Support enumeration returns one equilibrium per support. The distance test
looks for the equilibrium on that support farthest from the one found.
"""

import numpy as np

from multiess.ess import degeneracy_check, sne_maxdist, sne_support_qcp
from multiess.game import Support, derive_seed, random_game
from multiess.oracle import two_action_sne_closed_form

game = random_game(3, 3, derive_seed(7, 0))
T = Support((1, 2))

_, found = sne_support_qcp(game, T)
flag, d_star = sne_maxdist(game, T, found.strategy)
print("solver equilibrium:", found.strategy.probs.round(6))
print("farthest equilibrium at squared distance", round(d_star, 6), "-> degenerate" if flag else "")

###############################################################################
# On two-action supports the indifference condition is a quadratic, so the
# roots can be listed directly.
for root in two_action_sne_closed_form(game, T):
    print("closed form root:", root.probs.round(6))

###############################################################################
# The whole-game report lists every support with a second equilibrium.
print(degeneracy_check(game))

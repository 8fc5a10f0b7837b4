"""Published reference values the reproduction jobs compare against.

All numbers below are the reference study's reported results for the
five-node scenario (channel gains 0, -1.5, -2.5, -4 and -6 dB, unit-variance
local noise).  Tolerances are declared next to the values they gate so the
reproduction logic never hard-codes them.
"""
from __future__ import annotations

# Per-node post-change means corresponding to the dB gains above.
NODE_MEANS = (1.0, 0.84, 0.75, 0.63, 0.5)
NODE_GAINS_DB = (0.0, -1.5, -2.5, -4.0, -6.0)

# --- Table 1: mean decision delay under H1 after calibrating to a target
# error rate, fusion noise variance 5, quantizer levels +-(1, 2, 3, 4).
TABLE1_TARGETS = (0.1, 0.001)
TABLE1_RARE_TARGET = 5e-5          # opt-in long-running column
TABLE1_EDD = {
    ("dual-sprt", 0.1): 19.74,
    ("dual-sprt", 0.001): 31.37,
    ("dual-sprt", 5e-5): 34.177,
    ("sprt-csprt", 0.1): 15.52,
    ("sprt-csprt", 0.001): 22.59,
    ("sprt-csprt", 5e-5): 23.673,
    ("dual-csprt", 0.1): 14.96,
    ("dual-csprt", 0.001): 21.52,
    ("dual-csprt", 5e-5): 21.88,
}
TABLE1_EDD_RTOL = 0.07
# The reference's threshold-selection rule is unpublished; these local
# thresholds pin its operating region per target (validated against the
# published delays), and the fusion threshold is calibrated.
TABLE1_GAMMA_GRID = {0.1: (7.5,), 0.001: (8.0,), 5e-5: (8.0, 9.0)}

# --- Table 4: fixed operating points (gamma, beta), fusion noise variance 1.
# Columns: gamma, beta, simulated pfa, simulated delay, analytic pfa,
# analytic delay.
TABLE4_ROWS = (
    (15.0, 30.0, 0.0072, 33.1585, 0.0065, 31.7624),
    (12.0, 27.0, 0.00675, 26.8036, 0.00613, 24.9853),
    (14.0, 26.0, 0.01675, 30.0817, 0.01624, 29.1322),
)
TABLE4_SIM_EDD_RTOL = 0.05
TABLE4_SIM_PFA_RTOL = 0.05         # tolerance band; widened by the Wilson interval
TABLE4_ANALYTIC_RTOL = 0.10
# Consistency margin: our own |analytic - simulated| relative gap may exceed
# the reference's own gap by at most this many percentage points.
TABLE4_GAP_SLACK = 0.05

# --- Tables 2 and 3: composite-test variants, fusion noise variance 1.
# These are property-level references (the observation cost, clamp range and
# boundary constant are unpublished); the reproduction checks the orderings
# and reports the reference cells alongside for context.
TABLE2_TARGETS = (0.1, 0.05, 0.01)
TABLE2_EDD = {
    ("H1", "sprt-csprt"): (1.615, 2.480, 4.28),
    ("H1", "glr-sprt"): (1.597, 2.783, 5.286),
    ("H1", "glr-csprt"): (1.138, 2.221, 4.533),
    ("H0", "sprt-csprt"): (1.533, 2.334, 4.225),
    ("H0", "glr-sprt"): (2.985, 4.257, 7.047),
    ("H0", "glr-csprt"): (2.424, 3.734, 5.72),
}
TABLE3_TARGETS = (0.1, 0.07, 0.04)
TABLE3_EDD = {
    ("H1", "dual-sprt"): (1.74, 1.948, 2.728),
    ("H1", "glr-sprt"): (1.62, 3.533, 9.624),
    ("H1", "glr-csprt"): (0.94, 1.004, 4.225),
    ("H0", "dual-sprt"): (1.669, 1.891, 2.673),
    ("H0", "glr-sprt"): (3.191, 3.849, 4.823),
    ("H0", "glr-csprt"): (2.615, 3.192, 4.237),
}
# Ordering claims must hold by more than this many standard errors.
ORDERING_SE_MARGIN = 2.0

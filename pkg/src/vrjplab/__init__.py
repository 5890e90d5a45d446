"""Simulation and verification lab for the 1-D reinforced-walk random operator.

Modules
-------
stochastic       seedable streams, elementary samplers, reference CDFs
beta_field       the random potential on circle and half-line, its measure
green_circle     operator assembly and the closed-form circle inverse
matsumoto_yor    discrete hidden-Markov chains and their continuum limits
continuum_kernel the limiting kernel, quadratic form, operator checks
spectrum         phase-counting, FD spectra, renewal and density of states
stats            KS tests and moment confidence intervals
experiments/cli  registered, seeded verification runs
"""

__version__ = "0.1.0"

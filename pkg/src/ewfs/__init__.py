"""Extended Wigner's friend scenario toolkit.

Modules: ``qcore`` (dense states), ``scenario`` (EWFS correlations),
``polytope`` / ``dd`` (Bell, NS and LF polytopes), ``violation``
(measurement search), ``prescriptions`` (B-B rule, Deutsch experiment),
``betting`` (quantum wallet bets), ``jsonio`` and ``cli``.
"""

__version__ = "0.1.0"

"""mdcf: a laboratory for multidimensional continued fraction algorithms.

Subpackages implement the dynamical CF maps and their convergents, Monte
Carlo Lyapunov exponent estimation, LLL-based simultaneous Diophantine
approximation, exact verification of the nearest-integer Jacobi-Perron
Markov partition (d = 2), and the classical ergodic statistics of the
Gauss map.
"""

__version__ = "0.1.0"

"""quadriclab: a computational laboratory for resonant quadric systems.

Exact structural analysis of skew-symmetric interaction matrices and their
fiber quadrics, finite-field point counting with Bezout-bound certificates,
exact lattice resonance enumeration and normalized sums, quadrature for the
singular measure on the resonant quadric, and a damped/driven modified wave
kinetic solver built on top of it.
"""

__version__ = "0.1.0"

FORMAT_VERSION = "quadriclab.v1"

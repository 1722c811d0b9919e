"""Optimal transport on polyhedral skeletons.

Modules
-------
polyhedral   integral polyhedral complexes, rational points, quadrature
tropical     min-plus valuations, dominance regions, independence checking
cost         cost functions on source x target (pairings, theta data, limits)
transport    c-transforms, dual functional, solvers, energy
diagnostics  post-solution checks (MA residual, duality, hybrid limits)
families     generators for the shipped example families
cli          config-driven experiment runner
"""

__version__ = "0.1.0"

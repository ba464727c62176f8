"""Numerics for surface superconductivity in the fixed-field Ginzburg-Landau model.

Modules: geometry (curvilinear polygons), oned (boundary-layer problem),
spectral (Theta0, mu(beta), critical fields), mesh and gl2d (2D fixed-field
minimization and diagnostics), corner (corner energies), assemble
(energy prediction), records/plotting/config/commands/cli (front end).
"""

__version__ = "0.1.0"

"""Numerical simulation toolkit for three cell-biology models.

Subpackages cover bacterial aerotaxis band formation, growth-cone
gradient-sensing signal transduction, and endothelial-cell viscoelastic
deformation, each with time-stepping simulators and closed-form oracles.
"""

__version__ = "0.1.0"

"""NLS blow-up lab - approximate blow-up solutions of the 3D energy-critical focusing NLS."""

__version__ = "0.1.0"
__description__ = (
    "Numerical lab for matched-asymptotics approximate solutions of the energy-critical "
    "focusing NLS and the linearized flow around the ground state"
)

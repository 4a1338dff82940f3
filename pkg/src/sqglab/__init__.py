"""Pseudo-spectral laboratory for dissipative SQG, nudging and determining forms."""
from .spectral import (
    TorusGrid, SpectralField, PhysicalField, VelocityField,
    to_physical, to_spectral, from_function, fractional_laplacian, riesz_velocity,
    advection_term, sobolev_norm, lebesgue_norm, project_modes, random_field,
    save_snapshot, load_snapshot,
)

__version__ = "0.1.0"

"""Differential imaging forensics: synthesize photographer-present/absent photo
pairs with a photon-mapping renderer and estimate the photographer's jacket
size, bumpiness and colour from their difference."""

__version__ = "0.1.0"

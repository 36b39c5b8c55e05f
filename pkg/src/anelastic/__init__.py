"""Fourier-Galerkin solver for 2D anelastic flow over stratified and vacuum densities."""

"""Normalization Perturbation desk lab."""

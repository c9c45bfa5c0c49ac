"""Services implementing the perturbation lab."""

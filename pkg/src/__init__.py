# Normalization perturbation toolkit

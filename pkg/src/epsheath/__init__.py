"""Nonisentropic Euler-Poisson sheath simulation in a half line and perturbed half plane."""

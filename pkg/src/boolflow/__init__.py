"""Entropy and Hellinger flows on the Boolean hypercube."""

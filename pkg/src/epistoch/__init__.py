"""Stochastic SEIR epidemics with Gamma latent and infectious periods."""

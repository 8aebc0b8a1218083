"""HTTP service exposing simulation, solving and Monte Carlo experiments."""

"""Predict exponentially small eigenvalues of metastable operators from the
landscape of the potential, and check them against grid discretizations."""

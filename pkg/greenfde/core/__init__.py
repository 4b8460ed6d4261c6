# Numerical core of greenfde

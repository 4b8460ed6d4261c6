# CLI package for greenfde

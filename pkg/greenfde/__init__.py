# greenfde package initializer to ensure regular package imports in tests.

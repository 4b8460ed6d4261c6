# Problem configuration loading for greenfde
